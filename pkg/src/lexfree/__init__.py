"""Lexicon-free beam-search decoding for character-level speech recognition."""
from .decoder import (
    CHAR_LM_FREE, CHAR_LM_LEXICON, WORD_LM_LEXICON, PER_FRAME, PER_SEGMENT,
    DecodeResult, DecoderOptions, EmissionMatrix, TransitionMatrix,
    alignment_am_score, brute_force_decode, decode, total_score,
)
from .errors import *  # noqa: F401,F403
from .evaluation import cer, edit_distance, oov_recovery, split_iv_oov, wer
from .lexicon import Lexicon, LexiconTrie, build_trie, load_lexicon, read_lexicon, smear
from .ngram import (
    PAPER_SCHEDULE, CountTable, NGramModel, PruneSpec, count_ngrams, estimate,
    load_arpa, read_arpa, save_arpa, train, write_arpa,
)
from .perplexity import char_lm_word_ppl_bounds, word_ppl_word_lm
from .tokens import TokenSet, collapse_alignment, decode_chars, encode_sentence, encode_word
from .tune import SearchSpace, TrialResult, random_search
from .kernels import BACKEND

__version__ = "0.1.0"
