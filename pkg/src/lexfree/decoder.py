"""Frame-synchronous beam-search decoder over per-frame acoustic scores.

A transcription ``y`` with frame alignment ``pi`` is scored as::

    AM(pi) + alpha * ln P_LM(y) + beta * |y| + gamma * #silences(pi)

Three modes are supported: a word LM constrained by a lexicon trie, a
character LM constrained by the trie, and a character LM with no lexicon
at all, where any letter sequence between silences is a word.

Alignments are blank-free (ASG style): consecutive identical frame tokens
are one label, and repetition tokens spell real double letters.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kernels
from .errors import EmptyBeam, LengthMismatch, ModeMismatch, TooLarge, UnknownToken
from .lexicon import LexiconTrie, smear
from .ngram import LMContextState
from .tokens import LETTER, REPEAT, SIL, TokenSet, collapse_alignment, decode_chars, split_word_spans

LN10 = math.log(10.0)
TIE_EPS = 1e-12

WORD_LM_LEXICON = "word_lm_lexicon"
CHAR_LM_LEXICON = "char_lm_lexicon"
CHAR_LM_FREE = "char_lm_free"
MODES = (WORD_LM_LEXICON, CHAR_LM_LEXICON, CHAR_LM_FREE)
_MODE_CODE = {CHAR_LM_FREE: 0, CHAR_LM_LEXICON: 1, WORD_LM_LEXICON: 2}

PER_SEGMENT = "per_segment"
PER_FRAME = "per_frame"


@dataclass
class EmissionMatrix:
    """``T x N`` natural-log acoustic scores, one column per token."""

    scores: np.ndarray
    token_set: TokenSet

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2:
            raise ValueError("emission scores must be a T x N matrix")
        if self.scores.shape[1] != len(self.token_set):
            raise ValueError(
                f"emission matrix has {self.scores.shape[1]} columns for {len(self.token_set)} tokens"
            )
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("emission scores must be finite")

    @property
    def frames(self) -> int:
        return self.scores.shape[0]

    @property
    def n_tokens(self) -> int:
        return self.scores.shape[1]


@dataclass
class TransitionMatrix:
    """``N x N`` natural-log scores for moving between alignment tokens."""

    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2 or self.scores.shape[0] != self.scores.shape[1]:
            raise ValueError("transition scores must be a square matrix")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("transition scores must be finite")


@dataclass
class DecoderOptions:
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    beam_size: int = 100
    beam_threshold: float = math.inf
    mode: str = CHAR_LM_FREE
    silence_term: str = PER_SEGMENT
    smearing: bool = False

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if not self.beam_threshold >= 0:
            raise ValueError("beam_threshold must be >= 0")
        if self.mode not in MODES:
            raise ModeMismatch(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.silence_term not in (PER_SEGMENT, PER_FRAME):
            raise ValueError(f"silence_term must be {PER_SEGMENT!r} or {PER_FRAME!r}")


@dataclass
class DecodeResult:
    words: List[str]
    alignment: List[int]
    am_score: float
    lm_score: float  # natural log, unweighted
    word_count: int
    silence_count: int
    lm_weighted: float
    word_penalty: float
    silence_penalty: float
    total: float
    effective_beam_size: Optional[int] = None
    labels: List[int] = field(default_factory=list)

    def components(self) -> dict:
        return {
            "am": self.am_score,
            "lm": self.lm_weighted,
            "word_penalty": self.word_penalty,
            "silence_penalty": self.silence_penalty,
            "total": self.total,
        }


def _make_result(words, alignment, labels, am, lm, wc, sc, opt, eff=None) -> DecodeResult:
    lm_w = opt.alpha * lm
    wp = opt.beta * wc
    sp = opt.gamma * sc
    return DecodeResult(
        words=list(words),
        alignment=[int(a) for a in alignment],
        am_score=am,
        lm_score=lm,
        word_count=wc,
        silence_count=sc,
        lm_weighted=lm_w,
        word_penalty=wp,
        silence_penalty=sp,
        total=am + lm_w + wp + sp,
        effective_beam_size=eff,
        labels=[int(x) for x in labels],
    )


def _check_inputs(em, tr, lm, lex, opt):
    if em.frames == 0:
        raise ValueError("emission matrix has no frames")
    level = getattr(lm, "level", None)
    if opt.mode == WORD_LM_LEXICON:
        if level not in (None, "word"):
            raise ModeMismatch(f"{opt.mode} needs a word-level LM, got {level!r}")
    elif level not in (None, "char"):
        raise ModeMismatch(f"{opt.mode} needs a character-level LM, got {level!r}")
    if opt.mode != CHAR_LM_FREE:
        if lex is None:
            raise ModeMismatch(f"{opt.mode} needs a lexicon")
        if lex.n_tokens != em.n_tokens:
            raise ModeMismatch("lexicon trie and emissions use different token sets")
    if tr is not None and tr.scores.shape[0] != em.n_tokens:
        raise ModeMismatch("transition matrix size does not match the token set")


class _LMAdapter:
    """Gives LM states small integer ids and scores in natural log.

    ``labels[j]`` is the LM token the kernels call ``j``: emission tokens
    for character LMs, lexicon words for word LMs.
    """

    def __init__(self, lm, labels):
        self.lm = lm
        self.labels = labels
        self.tables = None
        if callable(getattr(lm, "compiled_tables", None)):
            # ids follow the model's own state table so compiled scoring agrees
            t = lm.compiled_tables()
            self.states = [LMContextState(k) for k in t.keys]
            self.ids = {st: i for i, st in enumerate(self.states)}
            wid = np.array([self._token_id(x) for x in labels], dtype=np.int32)
            self.tables = (wid, t)
        else:
            start = lm.start_state()
            self.states = [start]
            self.ids = {start: 0}

    def _token_id(self, label) -> int:
        try:
            return self.lm.token_id(label)
        except UnknownToken:
            return -1

    def _id(self, state) -> int:
        sid = self.ids.get(state)
        if sid is None:
            sid = len(self.states)
            self.ids[state] = sid
            self.states.append(state)
        return sid

    def step(self, sid, tok):
        try:
            ns, lp = self.lm.score(self.states[sid], self.labels[tok])
        except UnknownToken:
            return 0, -math.inf
        return self._id(ns), lp * LN10

    def finish(self, sid) -> float:
        return self.lm.finish(self.states[sid]) * LN10


def _prune(total: np.ndarray, threshold: float, beam_size: int) -> np.ndarray:
    order = np.argsort(-total, kind="stable")
    if math.isfinite(threshold):
        order = order[total[order] >= total[order[0]] - threshold]
    return order[:beam_size]


def _span_words(spans, trie: LexiconTrie):
    """Lexicon words spelled by each span (empty list when not a spelling)."""
    out = []
    for span in spans:
        node = trie.walk(span)
        out.append([] if node is None else [trie.words[w] for w in trie.node_words[node]])
    return out


def decode(em: EmissionMatrix, tr: Optional[TransitionMatrix], lm, lex: Optional[LexiconTrie],
           opt: DecoderOptions, backend: Optional[str] = None) -> DecodeResult:
    """Beam search for the transcription with the best combined score.

    ``lm`` is any scorer with ``start_state()``, ``score(state, token)``
    returning ``(state, log10 prob)`` and ``finish(state)``; states must be
    hashable, with equal states scoring identically.
    """
    _check_inputs(em, tr, lm, lex, opt)
    ts = em.token_set
    kinds = ts.kinds()
    mode = _MODE_CODE[opt.mode]
    child = starts = ids = smear_ln = None
    if opt.mode != CHAR_LM_FREE:
        child, starts, ids = lex.dense()
    if opt.mode == WORD_LM_LEXICON:
        labels = list(lex.words)
        if opt.smearing:
            if lex.smear_scores is None:
                smear(lex, lm)
            smear_ln = lex.smear_scores * LN10
    else:
        labels = list(ts.tokens)
    adapter = _LMAdapter(lm, labels)
    expander = kernels.get(backend).FrameExpander(
        kinds, ts.silence_index, mode, opt.silence_term == PER_FRAME,
        opt.alpha, opt.beta, opt.gamma,
        None if tr is None else tr.scores,
        child, starts, ids, smear_ln, adapter.step, adapter.tables,
    )

    beam = [
        np.zeros(1), np.zeros(1),
        np.zeros(1, np.int32), np.zeros(1, np.int32), np.zeros(1, np.int32),
        np.zeros(1, np.int32), np.full(1, -1, np.int32), np.zeros(1, np.int8),
    ]
    history = []
    for t in range(em.frames):
        cols = expander.expand(em.scores[t], *beam)
        total = cols[10]
        if len(total) == 0:
            raise EmptyBeam(f"no hypothesis survives frame {t}")
        keep = _prune(total, opt.beam_threshold, opt.beam_size)
        beam = [c[keep] for c in cols[:8]]
        history.append((cols[8][keep], cols[6][keep], cols[9][keep]))

    am, lm_sc, wc, sc, lms, node, last, _ = beam
    finals = []  # (total, beam index, am, lm, wc, sc, final word id)
    for j in range(len(am)):
        p = int(last[j])
        closing = p >= 0 and kinds[p] != SIL
        cands = []
        if closing and opt.mode != CHAR_LM_FREE:
            words_here = list(ids[starts[node[j]]:starts[node[j] + 1]])
            if not words_here:
                continue
            if opt.mode == WORD_LM_LEXICON:
                for w in words_here:
                    ns, lp = adapter.step(int(lms[j]), int(w))
                    if lp == -math.inf:
                        continue
                    cands.append((float(lm_sc[j]) + lp + adapter.finish(ns), int(w)))
            else:
                cands.append((float(lm_sc[j]) + adapter.finish(int(lms[j])), -1))
        else:
            cands.append((float(lm_sc[j]) + adapter.finish(int(lms[j])), -1))
        w_count = int(wc[j]) + (1 if closing else 0)
        for lm_total, w in cands:
            a = float(am[j])
            total = a + opt.alpha * lm_total + opt.beta * w_count + opt.gamma * int(sc[j])
            finals.append((total, j, a, lm_total, w_count, int(sc[j]), w))
    if not finals:
        raise EmptyBeam("no hypothesis can be finalized at the last frame")

    best = max(f[0] for f in finals)
    near = [f for f in finals if f[0] >= best - TIE_EPS]
    scored = []
    for f in near:
        alignment, ranks, word_ids = _backtrace(history, f[1])
        if f[6] >= 0:
            word_ids.append(f[6])
        labels_seq = collapse_alignment(alignment)
        words = _output_words(labels_seq, word_ids, ts, lex, opt)
        scored.append(((tuple(labels_seq), tuple(alignment), tuple(words)), f, alignment, ranks, words, labels_seq))
    _, f, alignment, ranks, words, labels_seq = min(scored, key=lambda s: s[0])
    return _make_result(words, alignment, labels_seq, f[2], f[3], f[4], f[5], opt, eff=1 + max(ranks))


def _backtrace(history, j):
    alignment, ranks, words = [], [], []
    for t in range(len(history) - 1, -1, -1):
        parent, last, word = history[t]
        alignment.append(int(last[j]))
        ranks.append(int(j))
        if word[j] >= 0:
            words.append(int(word[j]))
        j = int(parent[j])
    alignment.reverse()
    ranks.reverse()
    words.reverse()
    return alignment, ranks, words


def _output_words(labels_seq, word_ids, ts, lex, opt):
    if opt.mode == WORD_LM_LEXICON:
        return [lex.words[w] for w in word_ids]
    if opt.mode == CHAR_LM_LEXICON:
        return [ws[0] for ws in _span_words(split_word_spans(labels_seq, ts), lex)]
    return decode_chars(labels_seq, ts)


# ---------------------------------------------------------------------------
# exact scoring and the exhaustive oracle


def _chain_log10(lm, tokens) -> Optional[float]:
    state = lm.start_state()
    total = 0.0
    try:
        for tok in tokens:
            state, lp = lm.score(state, tok)
            total += lp
    except UnknownToken:
        return None
    return total + lm.finish(state)


def _char_lm_tokens(spans, ts: TokenSet) -> list:
    out = []
    for i, span in enumerate(spans):
        if i:
            out.append(ts.silence)
        out.extend(ts.tokens[k] for k in span)
    return out


def alignment_am_score(em: EmissionMatrix, tr: Optional[TransitionMatrix], alignment) -> float:
    total = 0.0
    prev = -1
    for t, v in enumerate(alignment):
        total += em.scores[t, v]
        if tr is not None and prev >= 0:
            total += tr.scores[prev, v]
        prev = v
    return float(total)


def silence_count(alignment, ts: TokenSet, silence_term: str) -> int:
    sil = ts.silence_index
    seq = alignment if silence_term == PER_FRAME else collapse_alignment(alignment)
    return sum(1 for v in seq if v == sil)


def _valid_labels(labels, ts: TokenSet) -> bool:
    prev = SIL
    for v in labels:
        k = ts.kind(v)
        if k == REPEAT and prev != LETTER:
            return False
        prev = k
    return True


def total_score(result: DecodeResult, em: EmissionMatrix, tr: Optional[TransitionMatrix], lm,
                opt: DecoderOptions) -> float:
    """Recompute every term of the objective from the alignment and words."""
    if len(result.alignment) != em.frames:
        raise LengthMismatch(f"alignment has {len(result.alignment)} frames, emissions have {em.frames}")
    ts = em.token_set
    am = alignment_am_score(em, tr, result.alignment)
    if opt.mode == WORD_LM_LEXICON:
        lm_tokens = list(result.words)
    else:
        lm_tokens = _char_lm_tokens(split_word_spans(collapse_alignment(result.alignment), ts), ts)
    lm_log10 = _chain_log10(lm, lm_tokens)
    if lm_log10 is None:
        return -math.inf
    sc = silence_count(result.alignment, ts, opt.silence_term)
    return am + opt.alpha * (lm_log10 * LN10) + opt.beta * len(result.words) + opt.gamma * sc


MAX_BRUTE_FORCE = 10 ** 6


def brute_force_decode(em: EmissionMatrix, tr: Optional[TransitionMatrix], lm,
                       lex: Optional[LexiconTrie], opt: DecoderOptions) -> DecodeResult:
    """Score every alignment exhaustively and return the best transcription."""
    _check_inputs(em, tr, lm, lex, opt)
    ts = em.token_set
    T, N = em.frames, em.n_tokens
    if N ** T > MAX_BRUTE_FORCE:
        raise TooLarge(f"{N}^{T} alignments exceed the enumeration limit {MAX_BRUTE_FORCE}")
    lm_cache = {}
    cands = []
    for alignment in itertools.product(range(N), repeat=T):
        labels = collapse_alignment(alignment)
        if not _valid_labels(labels, ts):
            continue
        spans = split_word_spans(labels, ts)
        if opt.mode == CHAR_LM_FREE:
            readings = [decode_chars(labels, ts)]
        else:
            options = _span_words(spans, lex)
            if any(not o for o in options):
                continue
            if opt.mode == CHAR_LM_LEXICON:
                readings = [[o[0] for o in options]]
            else:
                readings = [list(r) for r in itertools.product(*options)]
        am = alignment_am_score(em, tr, alignment)
        sc = silence_count(alignment, ts, opt.silence_term)
        for words in readings:
            lm_tokens = tuple(words) if opt.mode == WORD_LM_LEXICON else tuple(_char_lm_tokens(spans, ts))
            if lm_tokens not in lm_cache:
                lp = _chain_log10(lm, lm_tokens)
                lm_cache[lm_tokens] = None if lp is None else lp * LN10
            lm_ln = lm_cache[lm_tokens]
            if lm_ln is None:
                continue
            total = am + opt.alpha * lm_ln + opt.beta * len(words) + opt.gamma * sc
            cands.append((total, (tuple(labels), tuple(alignment), tuple(words)), am, lm_ln, len(words), sc))
    if not cands:
        raise EmptyBeam("no alignment yields a valid transcription")
    best = max(c[0] for c in cands)
    _, key, am, lm_ln, wc, sc = min((c for c in cands if c[0] >= best - TIE_EPS), key=lambda c: c[1])
    labels, alignment, words = key
    return _make_result(words, alignment, labels, am, lm_ln, wc, sc, opt)
