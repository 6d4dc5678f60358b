"""Shared generators for randomized decoder and LM tests."""
import math
import random
import warnings

import numpy as np

from lexfree.decoder import (
    CHAR_LM_FREE, MODES, PER_FRAME, PER_SEGMENT, WORD_LM_LEXICON,
    DecoderOptions, EmissionMatrix, TransitionMatrix,
)
from lexfree.errors import DegenerateCountsWarning, LexfreeError
from lexfree.lexicon import Lexicon, build_trie
from lexfree.ngram import train
from lexfree.tokens import TokenSet, encode_sentence, encode_word


def quiet_train(*args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateCountsWarning)
        return train(*args, **kwargs)


def char_corpus(sentences, ts):
    return [[ts.tokens[i] for i in encode_sentence(s, ts)] for s in sentences]


def random_instance(rng: random.Random, mode=None, beam_size=10_000, max_frames=4):
    """A small decoding problem: (em, tr, lm, trie, opt), at most 4 tokens and 3 words."""
    while True:
        letters = ["a", "b", "c"][: rng.randint(1, 3)]
        toks = list(letters)
        if len(letters) <= 2 and rng.random() < 0.4:
            toks.append("1")
        toks.append("|")
        ts = TokenSet.from_tokens(toks)
        words = []
        for _ in range(3):
            w = "".join(rng.choice(letters) for _ in range(rng.randint(1, 3)))
            try:
                encode_word(w, ts)
            except LexfreeError:
                continue
            if w not in words:
                words.append(w)
        if words:
            break
    words.sort()
    trie = build_trie(Lexicon.from_words(words, ts), ts)
    mode = mode or rng.choice(MODES)
    sentences = [[rng.choice(words) for _ in range(rng.randint(1, 3))] for _ in range(4)]
    if mode == WORD_LM_LEXICON:
        lm = quiet_train(sentences, rng.randint(1, 3), level="word")
    else:
        lm = quiet_train(char_corpus(sentences, ts), rng.randint(1, 4), level="char", vocabulary=ts.tokens)
    n, t = len(ts), rng.randint(1, max_frames)
    em = EmissionMatrix(np.array([[rng.uniform(-5, 0) for _ in range(n)] for _ in range(t)]), ts)
    tr = None
    if rng.random() < 0.5:
        tr = TransitionMatrix(np.array([[rng.uniform(-2, 0) for _ in range(n)] for _ in range(n)]))
    opt = DecoderOptions(
        alpha=rng.uniform(0, 5), beta=rng.uniform(-5, 5), gamma=rng.uniform(-5, 5),
        beam_size=beam_size, mode=mode,
        silence_term=rng.choice([PER_SEGMENT, PER_FRAME]),
        smearing=mode == WORD_LM_LEXICON and rng.random() < 0.3,
    )
    return em, tr, lm, (None if mode == CHAR_LM_FREE and rng.random() < 0.5 else trie), opt, words


def oov_fixture():
    """Emissions that clearly spell "the fauchelevent cat" with noise; lexicon lacks the middle word."""
    ts = TokenSet.standard()
    words = ["the", "fauchelevent", "cat"]
    seq = encode_sentence(words, ts)
    rng = np.random.default_rng(7)
    scores = rng.uniform(-9.0, -6.0, size=(2 * len(seq), len(ts)))
    for i, tok in enumerate(seq):
        scores[2 * i, tok] = scores[2 * i + 1, tok] = -0.05
    em = EmissionMatrix(scores, ts)
    vocab = ["the", "cat", "sat", "fat", "chef", "event", "a"]
    corpus = ["the cat sat", "a fat cat", "the chef sat", "the event", "a cat", "the fat chef"]
    return em, ts, vocab, [s.split() for s in corpus]


def uniform_char_lm(tokens):
    """Order-1 char LM that is uniform over ``tokens`` plus end-of-sentence."""
    from lexfree.ngram import load_arpa
    items = list(tokens) + ["</s>"]
    lp = -math.log10(len(items))
    lines = ["\\data\\", f"ngram 1={len(items) + 1}", "", "\\1-grams:", "-99\t<s>"]
    lines += [f"{lp:.10f}\t{t}" for t in items]
    lines += ["", "\\end\\", ""]
    return load_arpa("\n".join(lines), level="char")
