"""Word-level perplexity for word LMs and word-perplexity bounds for character LMs.

A character LM assigns a word the product of its letter probabilities
followed by a terminator (a silence mid-sentence, end-of-sentence for the
last word). That unnormalized probability gives an upper perplexity bound.
Renormalizing over the most probable vocabulary words (by a word LM) that
cover a fixed share of its mass gives the lower bound; with full coverage
it is the exact vocabulary-normalized perplexity.

Words outside the vocabulary are excluded from the count but still feed
the models' context.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import EmptyCorpus
from .tokens import TokenSet, encode_word

SILENCE_TERM = "silence"
EOS_TERM = "eos"


@dataclass
class PerplexityReport:
    n_words: int
    n_excluded: int
    log10_sum: float
    ppl: Optional[float] = None
    ppl_lower: Optional[float] = None
    ppl_upper: Optional[float] = None
    log10_sum_lower: Optional[float] = None
    coverage_mass: Optional[float] = None

    def as_dict(self) -> dict:
        out = {"n_words": self.n_words, "n_excluded": self.n_excluded}
        for key in ("ppl", "ppl_lower", "ppl_upper", "coverage_mass"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    def format_text(self) -> str:
        d = self.as_dict()
        width = max(len(k) for k in d)
        aligned = [f"{k.ljust(width)}  {_fmt(v)}" for k, v in d.items()]
        machine = [f"{k}={_fmt(v)}" for k, v in d.items()]
        return "\n".join(aligned + [""] + machine) + "\n"


def _fmt(v) -> str:
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def _ppl(log10_sum: float, n: int) -> float:
    return 10.0 ** (-log10_sum / n)


def _tokenize(corpus: Iterable) -> list:
    return [s.split() if isinstance(s, str) else list(s) for s in corpus]


def word_ppl_word_lm(lm, corpus: Iterable, vocab: Optional[Iterable[str]] = None) -> PerplexityReport:
    """Perplexity over in-vocabulary word occurrences; end-of-sentence is not scored."""
    if vocab is None:
        vocab = [w for w in lm.predictable() if not w.startswith("<")]
    vocab = set(vocab)
    n = excluded = 0
    total = 0.0
    for words in _tokenize(corpus):
        state = lm.start_state()
        for w in words:
            state, lp = lm.score(state, w)
            if w in vocab:
                total += lp
                n += 1
            else:
                excluded += 1
    if n == 0:
        raise EmptyCorpus("no in-vocabulary words to score")
    return PerplexityReport(n, excluded, total, ppl=_ppl(total, n))


def _terminate(lm, state, terminator: str, ts: TokenSet):
    if terminator == EOS_TERM:
        return state, lm.finish(state)
    if terminator == SILENCE_TERM:
        return lm.score(state, ts.silence)
    raise ValueError(f"terminator must be {SILENCE_TERM!r} or {EOS_TERM!r}")


def word_logprob_char_lm(lm, state, word: str, terminator: str = SILENCE_TERM,
                         ts: Optional[TokenSet] = None):
    """log10 P(word + terminator | state) under a character LM and the advanced state."""
    ts = ts or TokenSet.standard()
    total = 0.0
    for idx in encode_word(word, ts):
        state, lp = lm.score(state, ts.tokens[idx])
        total += lp
    state, lp = _terminate(lm, state, terminator, ts)
    return state, total + lp


def normalizer(lm, state, subset: Iterable[str], terminator: str = SILENCE_TERM,
               ts: Optional[TokenSet] = None) -> float:
    """Sum of P(word + terminator | state) over ``subset`` (linear probability).

    Spellings are walked as a prefix tree so shared prefixes are scored once.
    """
    ts = ts or TokenSet.standard()
    root = {}
    end = object()
    for w in subset:
        node = root
        for idx in encode_word(w, ts):
            node = node.setdefault(ts.tokens[idx], {})
        node[end] = True
    total = 0.0
    stack = [(root, state, 0.0)]
    while stack:
        node, st, acc = stack.pop()
        for tok, child in node.items():
            if tok is end:
                _, lp = _terminate(lm, st, terminator, ts)
                total += 10.0 ** (acc + lp)
                continue
            nst, lp = lm.score(st, tok)
            stack.append((child, nst, acc + lp))
    return total


def top_mass_subset(word_lm, context: Sequence[str], vocab: Iterable[str], mass: float = 0.95) -> list:
    """Most probable words (by ``word_lm`` after ``context``) covering ``mass`` of V's total."""
    if not 0 < mass <= 1:
        raise ValueError("mass must be in (0, 1]")
    state = word_lm.start_state()
    for w in context:
        state, _ = word_lm.score(state, w)
    scored = sorted(((10.0 ** word_lm.score(state, w)[1], w) for w in vocab), key=lambda pw: (-pw[0], pw[1]))
    if mass >= 1:
        return [w for _, w in scored]
    target = mass * sum(p for p, _ in scored)
    out = []
    acc = 0.0
    for p, w in scored:
        out.append(w)
        acc += p
        if acc >= target * (1 - 1e-12):
            break
    return out


def char_lm_word_ppl_bounds(char_lm, word_lm, corpus: Iterable, vocab: Iterable[str],
                            mass: float = 0.95, ts: Optional[TokenSet] = None) -> PerplexityReport:
    """Lower and upper word-perplexity bounds for a character LM.

    Each in-vocabulary word contributes its unnormalized probability to the
    upper bound and its probability renormalized over
    ``top_mass_subset(word_lm, preceding words, vocab, mass)`` to the lower.
    """
    ts = ts or TokenSet.standard()
    vocab = list(dict.fromkeys(vocab))
    vocab_set = set(vocab)
    n = excluded = 0
    upper = lower = 0.0
    denom_cache = {}
    for words in _tokenize(corpus):
        cstate = char_lm.start_state()
        context = []
        wstate = word_lm.start_state()
        for i, w in enumerate(words):
            term = EOS_TERM if i == len(words) - 1 else SILENCE_TERM
            nstate, lp = word_logprob_char_lm(char_lm, cstate, w, term, ts)
            if w in vocab_set:
                key = (cstate, wstate, term)
                den = denom_cache.get(key)
                if den is None:
                    subset = top_mass_subset(word_lm, context, vocab, mass)
                    den = normalizer(char_lm, cstate, subset, term, ts)
                    denom_cache[key] = den
                upper += lp
                lower += lp - math.log10(den)
                n += 1
            else:
                excluded += 1
            cstate = nstate
            context.append(w)
            wstate, _ = word_lm.score(wstate, w)
    if n == 0:
        raise EmptyCorpus("no in-vocabulary words to score")
    return PerplexityReport(
        n, excluded, upper,
        ppl_lower=_ppl(lower, n), ppl_upper=_ppl(upper, n),
        log10_sum_lower=lower, coverage_mass=mass,
    )
