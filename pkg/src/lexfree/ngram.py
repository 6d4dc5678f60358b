"""Backoff n-gram language models over characters or words.

Training is interpolated modified Kneser-Ney with optional count-threshold
pruning. Models are stored and exchanged as ARPA text (log10 values).
"""
from __future__ import annotations

import io
import math
import re
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateCountsWarning, OrderMismatch, ParseError, UnknownToken

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
MARKERS = (BOS, EOS, UNK)

LOG10_ZERO = -99.0
FALLBACK_DISCOUNT = 0.5


@dataclass(frozen=True)
class LMContextState:
    """The part of the history an n-gram model can still condition on.

    Truncated to the longest suffix the model stores, so equal states score
    every continuation identically.
    """

    context: tuple = ()


# ---------------------------------------------------------------------------
# counting


@dataclass
class CountTable:
    order: int
    counts: list  # counts[k - 1]: k-gram tuple -> raw count
    vocab: set = field(default_factory=set)

    def __getitem__(self, k: int) -> dict:
        return self.counts[k - 1]

    def is_empty(self) -> bool:
        return not self.counts or not self.counts[0]

    def to_tsv(self) -> str:
        lines = []
        for k in range(1, self.order + 1):
            for gram in sorted(self[k]):
                lines.append(f"{' '.join(gram)}\t{self[k][gram]}")
        return "\n".join(lines) + ("\n" if lines else "")


def count_ngrams(corpus: Iterable[Sequence[str]], order: int, vocabulary: Iterable[str] = ()) -> CountTable:
    """Count all 1..order-grams ending at each predicted position.

    Sentences are padded with ``order - 1`` begin markers and closed by an
    end marker, which is counted like any other token.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    counts = [Counter() for _ in range(order)]
    vocab = set(vocabulary)
    pad = [BOS] * (order - 1)
    seen_any = False
    for sentence in corpus:
        seen_any = True
        padded = pad + list(sentence) + [EOS]
        vocab.update(sentence)
        for i in range(order - 1, len(padded)):
            for k in range(1, order + 1):
                counts[k - 1][tuple(padded[i - k + 1 : i + 1])] += 1
    if seen_any:
        vocab.update((BOS, EOS))
    return CountTable(order, [dict(c) for c in counts], vocab)


def read_count_tsv(text: str, order: int) -> CountTable:
    counts = [dict() for _ in range(order)]
    vocab = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            gram, c = line.rsplit("\t", 1)
            toks = tuple(gram.split(" "))
            counts[len(toks) - 1][toks] = int(c)
        except (ValueError, IndexError):
            raise ParseError(f"bad count line {line!r}", lineno) from None
        vocab.update(toks)
    return CountTable(order, counts, vocab)


# ---------------------------------------------------------------------------
# pruning spec


@dataclass(frozen=True)
class PruneSpec:
    """Per-order maximum raw count that gets dropped (0 keeps everything).

    ``open_from`` is ``(k, c)`` meaning every order >= k uses threshold c.
    """

    thresholds: Dict[int, int] = field(default_factory=dict)
    open_from: Optional[tuple] = None

    def __post_init__(self):
        for k, c in self.thresholds.items():
            if k < 1 or c < 0:
                raise ValueError(f"bad prune threshold {k}:{c}")
        if self.open_from is not None and (self.open_from[0] < 1 or self.open_from[1] < 0):
            raise ValueError(f"bad open-ended prune threshold {self.open_from}")

    def threshold(self, k: int) -> int:
        if k in self.thresholds:
            return self.thresholds[k]
        if self.open_from is not None and k >= self.open_from[0]:
            return self.open_from[1]
        return 0

    def expand(self, order: int) -> Dict[int, int]:
        """Explicit ``{order: threshold}`` for all pruned orders up to ``order``."""
        return {k: self.threshold(k) for k in range(1, order + 1) if self.threshold(k) > 0}

    @classmethod
    def parse(cls, text: str) -> "PruneSpec":
        """Parse ``"6:1,7:1,8:1,9:2,10+:3"``; ranges like ``"10-20:3"`` also work."""
        thresholds = {}
        open_from = None
        text = text.strip()
        if not text:
            return cls()
        for part in text.split(","):
            m = re.fullmatch(r"\s*(\d+)(?:(\+)|-(\d+))?\s*:\s*(\d+)\s*", part)
            if not m:
                raise ValueError(f"cannot parse prune item {part!r}")
            lo, plus, hi, c = m.group(1), m.group(2), m.group(3), int(m.group(4))
            if plus:
                open_from = (int(lo), c)
            elif hi:
                for k in range(int(lo), int(hi) + 1):
                    thresholds[k] = c
            else:
                thresholds[int(lo)] = c
        return cls(thresholds, open_from)


PAPER_SCHEDULE = "6:1,7:1,8:1,9:2,10+:3"


# ---------------------------------------------------------------------------
# the model


@dataclass
class LMTables:
    keys: list
    suffix: np.ndarray  # longest proper suffix that is a state; -1 for the empty context
    length: np.ndarray
    backoff: np.ndarray  # log10, 0 when absent
    prob_keys: np.ndarray  # (context id << 32) | token id
    prob_values: np.ndarray
    ext_keys: np.ndarray  # (state id << 32) | token id -> state extended by the token
    ext_values: np.ndarray
    root: int
    order: int


class NGramModel:
    """Backoff n-gram model with log10 probabilities.

    ``probs`` and ``backoffs`` are keyed by tuples of vocabulary ids across
    all orders. Backoff weights missing from the table count as log10 1.
    """

    def __init__(self, order: int, vocab: Sequence[str], probs: dict, backoffs: dict, level: str = "word"):
        if level not in ("char", "word"):
            raise ValueError(f"level must be 'char' or 'word', got {level!r}")
        self.order = order
        self.level = level
        self.vocab = list(vocab)
        self.index = {w: i for i, w in enumerate(self.vocab)}
        self.probs = probs
        self.backoffs = backoffs
        self.bos_id = self.index.get(BOS)
        self.eos_id = self.index.get(EOS)
        self.unk_id = self.index.get(UNK)
        keys = set()
        for gram in probs:
            if len(gram) < order:
                keys.add(gram)
            for j in range(1, len(gram)):
                keys.add(gram[:j])
        keys.update(backoffs)
        self._state_keys = keys
        self._trunc_cache = {}
        self._tables = None

    def __repr__(self):
        return f"NGramModel(order={self.order}, level={self.level!r}, vocab={len(self.vocab)}, ngrams={len(self.probs)})"

    # -- vocabulary ---------------------------------------------------------
    def token_id(self, token: str) -> int:
        idx = self.index.get(token)
        if idx is None or (idx,) not in self.probs:
            if self.level == "word" and self.unk_id is not None:
                return self.unk_id
            raise UnknownToken(f"token {token!r} not in the {self.level} LM vocabulary")
        return idx

    def has_token(self, token: str) -> bool:
        idx = self.index.get(token)
        return idx is not None and (idx,) in self.probs

    def predictable(self) -> list:
        """Vocabulary items that carry probability mass (everything but <s>)."""
        return [w for w in self.vocab if w != BOS and (self.index[w],) in self.probs]

    def ngram_counts(self) -> Dict[int, int]:
        out = Counter(len(g) for g in self.probs)
        return {k: out.get(k, 0) for k in range(1, self.order + 1)}

    # -- querying -----------------------------------------------------------
    def _truncate(self, hist: tuple) -> tuple:
        cached = self._trunc_cache.get(hist)
        if cached is not None:
            return cached
        keep = self.order - 1
        h = hist[len(hist) - keep:] if len(hist) > keep else hist
        keys = self._state_keys
        while h and h not in keys:
            h = h[1:]
        self._trunc_cache[hist] = h
        return h

    def start_state(self) -> LMContextState:
        if self.order == 1 or self.bos_id is None:
            return LMContextState(())
        return LMContextState(self._truncate((self.bos_id,) * (self.order - 1)))

    def logprob_id(self, context: tuple, wid: int) -> float:
        probs, backoffs = self.probs, self.backoffs
        acc = 0.0
        for s in range(len(context) + 1):
            sub = context[s:]
            lp = probs.get(sub + (wid,))
            if lp is not None:
                return acc + lp
            acc += backoffs.get(sub, 0.0)
        raise UnknownToken(f"id {wid} has no unigram entry")

    def score_id(self, state: LMContextState, wid: int):
        ctx = state.context
        lp = self.logprob_id(ctx, wid)
        return LMContextState(self._truncate(ctx + (wid,))), lp

    def score(self, state: LMContextState, token: str):
        """Return ``(next_state, log10 P(token | state))``."""
        return self.score_id(state, self.token_id(token))

    def finish(self, state: LMContextState) -> float:
        """log10 probability of the end-of-sentence marker after ``state``."""
        return self.logprob_id(state.context, self.eos_id)

    def sentence_logprob(self, tokens: Iterable[str]) -> float:
        state = self.start_state()
        total = 0.0
        for tok in tokens:
            state, lp = self.score(state, tok)
            total += lp
        return total + self.finish(state)

    def unigram_logprob(self, token: str) -> float:
        return self.probs[(self.token_id(token),)]

    def compiled_tables(self) -> "LMTables":
        """Integer tables that let compiled code score without calling back.

        State ids index ``keys``; id 0 is the start state.
        """
        if self._tables is None:
            start = self.start_state().context
            keys = [start] + sorted(k for k in self._state_keys | {()} if k != start)
            sid = {k: i for i, k in enumerate(keys)}
            suffix = np.full(len(keys), -1, dtype=np.int32)
            for i, k in enumerate(keys):
                if k:
                    h = k[1:]
                    while h not in sid:
                        h = h[1:]
                    suffix[i] = sid[h]
            # every stored n-gram's context and every state's parent is a state
            prob = {(sid[g[:-1]] << 32) | g[-1]: lp for g, lp in self.probs.items()}
            ext = {(sid[k[:-1]] << 32) | k[-1]: sid[k] for k in keys if k}
            self._tables = LMTables(
                keys=keys,
                suffix=suffix,
                length=np.array([len(k) for k in keys], dtype=np.int32),
                backoff=np.array([self.backoffs.get(k, 0.0) for k in keys], dtype=np.float64),
                prob_keys=np.fromiter(prob.keys(), dtype=np.uint64, count=len(prob)),
                prob_values=np.fromiter(prob.values(), dtype=np.float64, count=len(prob)),
                ext_keys=np.fromiter(ext.keys(), dtype=np.uint64, count=len(ext)),
                ext_values=np.fromiter(ext.values(), dtype=np.int32, count=len(ext)),
                root=sid[()],
                order=self.order,
            )
        return self._tables

    def contexts(self) -> list:
        """Every stored conditioning context, as states."""
        return [LMContextState(k) for k in sorted(self._state_keys)]


# ---------------------------------------------------------------------------
# estimation


def _discounts(adjusted: Iterable[int], k: int):
    coc = Counter(c for c in adjusted if c <= 4)
    t1, t2, t3, t4 = (coc.get(j, 0) for j in (1, 2, 3, 4))
    if min(t1, t2, t3, t4) > 0:
        y = t1 / (t1 + 2 * t2)
        d = (1 - 2 * y * t2 / t1, 2 - 3 * y * t3 / t2, 3 - 4 * y * t4 / t3)
        if 0 < d[0] <= 1 and 0 < d[1] <= 2 and 0 < d[2] <= 3:
            return d
        reason = f"discounts out of range {d}"
    else:
        reason = f"count-of-counts {t1},{t2},{t3},{t4}"
    warnings.warn(
        f"order {k}: {reason}; using absolute discount {FALLBACK_DISCOUNT}",
        DegenerateCountsWarning,
        stacklevel=3,
    )
    return (FALLBACK_DISCOUNT,) * 3


def _discount_for(d, c: int) -> float:
    if c <= 0:
        return 0.0
    return d[min(c, 3) - 1]


def estimate(table: CountTable, prune: Optional[PruneSpec] = None, level: str = "word") -> NGramModel:
    """Interpolated modified Kneser-Ney estimate from raw counts.

    n-grams whose raw count is at or below the order's prune threshold are
    dropped; their discounted mass moves into the context's backoff weight.
    Extensions of a dropped n-gram are dropped with it.
    """
    if table.is_empty():
        raise ValueError("cannot estimate a model from an empty count table")
    prune = prune or PruneSpec()
    n = table.order
    for k in prune.thresholds:
        if k > n:
            raise ValueError(f"prune threshold for order {k} exceeds model order {n}")
    if prune.threshold(1) > 0:
        raise ValueError("unigrams cannot be pruned")

    raw = {k: table[k] for k in range(1, n + 1)}
    adjusted = {n: raw[n]}
    for k in range(n - 1, 0, -1):
        left = Counter(g[1:] for g in raw[k + 1])
        adjusted[k] = {g: (c if g[0] == BOS else left[g]) for g, c in raw[k].items()}

    def all_bos(g):
        return all(t == BOS for t in g)

    kept = {1: set(raw[1])}
    for k in range(2, n + 1):
        thr = prune.threshold(k)
        below = kept[k - 1]
        kept[k] = {
            g
            for g, c in raw[k].items()
            if c > thr and (g[:-1] in below or all_bos(g[:-1])) and g[1:] in below
        }

    vocab = sorted(table.vocab | {BOS, EOS})
    if level == "word":
        vocab = sorted(set(vocab) | {UNK})
    predict = [w for w in vocab if w != BOS]
    uniform = 1.0 / len(predict)

    prob = {}  # gram -> linear probability, kept grams only
    ctx_gamma = {}
    pruned_mass = {}
    for k in range(1, n + 1):
        d = _discounts(adjusted[k].values(), k)
        stats = defaultdict(lambda: [0, 0.0])  # context -> [S, sum of discounts]
        for g, a in adjusted[k].items():
            st = stats[g[:-1]]
            st[0] += a
            st[1] += _discount_for(d, a)
        for h, (s, dsum) in stats.items():
            ctx_gamma[h] = dsum / s
        if k == 1:
            s, _ = stats[()]
            gamma = ctx_gamma[()]
            for w in predict:
                a = adjusted[1].get((w,), 0)
                prob[(w,)] = max(a - _discount_for(d, a), 0.0) / s + gamma * uniform
            continue
        for g, a in adjusted[k].items():
            h = g[:-1]
            s = stats[h][0]
            share = max(a - _discount_for(d, a), 0.0) / s
            if g in kept[k]:
                prob[g] = share + ctx_gamma[h] * prob[g[1:]]
            else:
                pruned_mass[h] = pruned_mass.get(h, 0.0) + share

    # backoff weights for every context that has kept extensions
    extensions = defaultdict(list)
    for k in range(2, n + 1):
        for g in kept[k]:
            extensions[g[:-1]].append(g)
    bow = {}
    for h, grams in extensions.items():
        lower_kept = sum(prob[g[1:]] for g in grams)
        rest = 1.0 - lower_kept
        if rest <= 1e-12:
            bow[h] = 1.0
        else:
            bow[h] = ctx_gamma[h] + pruned_mass.get(h, 0.0) / rest

    index = {w: i for i, w in enumerate(vocab)}
    probs = {}
    backoffs = {}
    for g, p in prob.items():
        probs[tuple(index[t] for t in g)] = math.log10(p)
    for j in range(1, n):
        g = (BOS,) * j
        if j == 1 or g in extensions:
            probs[tuple(index[t] for t in g)] = -math.inf
    for h, b in bow.items():
        backoffs[tuple(index[t] for t in h)] = math.log10(b)
    return NGramModel(n, vocab, probs, backoffs, level=level)


def train(corpus: Iterable[Sequence[str]], order: int, prune: Optional[PruneSpec] = None,
          level: str = "word", vocabulary: Iterable[str] = ()) -> NGramModel:
    return estimate(count_ngrams(corpus, order, vocabulary), prune, level=level)


# ---------------------------------------------------------------------------
# ARPA I/O


def _fmt(x: float) -> str:
    if x == -math.inf or x <= LOG10_ZERO:
        return "-99"
    s = f"{x:.7f}"
    return "0" if s in ("0.0000000", "-0.0000000") else s


def save_arpa(model: NGramModel) -> str:
    """Serialise to ARPA text. Output is deterministic for a given model."""
    by_order = defaultdict(list)
    for g, lp in model.probs.items():
        by_order[len(g)].append((tuple(model.vocab[i] for i in g), g, lp))
    out = io.StringIO()
    out.write("\n\\data\\\n")
    for k in range(1, model.order + 1):
        out.write(f"ngram {k}={len(by_order[k])}\n")
    for k in range(1, model.order + 1):
        out.write(f"\n\\{k}-grams:\n")
        for words, g, lp in sorted(by_order[k]):
            line = f"{_fmt(lp)}\t{' '.join(words)}"
            if g in model.backoffs:
                line += f"\t{_fmt(model.backoffs[g])}"
            out.write(line + "\n")
    out.write("\n\\end\\\n")
    return out.getvalue()


def _infer_level(words) -> str:
    if UNK in words:
        return "word"
    plain = [w for w in words if w not in MARKERS]
    return "char" if plain and all(len(w) == 1 for w in plain) else "word"


def _parse_value(text: str, lineno: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"expected a number, got {text!r}", lineno) from None
    return -math.inf if v <= LOG10_ZERO else v


def load_arpa(text: str, level: Optional[str] = None) -> NGramModel:
    """Parse ARPA text. ``level`` is inferred from the vocabulary when omitted."""
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].strip() != "\\data\\":
        if lines[i].strip():
            raise ParseError(f"expected \\data\\ header, got {lines[i].strip()!r}", i + 1)
        i += 1
    if i == len(lines):
        raise ParseError("missing \\data\\ section", i)
    i += 1
    declared = {}
    while i < len(lines) and lines[i].strip():
        m = re.fullmatch(r"ngram\s+(\d+)\s*=\s*(\d+)", lines[i].strip())
        if not m:
            raise ParseError(f"bad \\data\\ entry {lines[i].strip()!r}", i + 1)
        declared[int(m.group(1))] = int(m.group(2))
        i += 1
    if not declared:
        raise ParseError("empty \\data\\ section", i + 1)
    order = max(declared)

    entries = []  # (words, logp, bow or None, lineno)
    seen = Counter()
    current = None
    ended = False
    for j in range(i, len(lines)):
        line = lines[j].strip()
        lineno = j + 1
        if not line:
            continue
        if line == "\\end\\":
            ended = True
            break
        m = re.fullmatch(r"\\(\d+)-grams:", line)
        if m:
            current = int(m.group(1))
            if current not in declared:
                raise OrderMismatch(f"section for order {current} not declared in \\data\\", lineno)
            continue
        if line.startswith("\\"):
            raise ParseError(f"malformed section header {line!r}", lineno)
        if current is None:
            raise ParseError("n-gram entry outside any section", lineno)
        fields = line.split()
        if len(fields) == current + 1:
            bow = None
        elif len(fields) == current + 2:
            bow = _parse_value(fields[-1], lineno)
        else:
            raise ParseError(f"expected {current} words in {line!r}", lineno)
        logp = _parse_value(fields[0], lineno)
        entries.append((tuple(fields[1 : current + 1]), logp, bow, lineno))
        seen[current] += 1
    if not ended:
        raise ParseError("missing \\end\\ marker", len(lines))
    for k, c in declared.items():
        if seen[k] != c:
            raise OrderMismatch(f"\\data\\ declares {c} {k}-grams but {seen[k]} were found")

    vocab = sorted({words[0] for words, _, _, _ in entries if len(words) == 1})
    index = {w: idx for idx, w in enumerate(vocab)}
    probs = {}
    backoffs = {}
    for words, logp, bow, lineno in entries:
        try:
            g = tuple(index[w] for w in words)
        except KeyError as exc:
            raise ParseError(f"word {exc.args[0]!r} has no unigram entry", lineno) from None
        probs[g] = logp
        if bow is not None:
            backoffs[g] = bow
    return NGramModel(order, vocab, probs, backoffs, level=level or _infer_level(vocab))


def read_arpa(path, level: Optional[str] = None) -> NGramModel:
    with open(path, encoding="utf-8") as f:
        return load_arpa(f.read(), level=level)


def write_arpa(model: NGramModel, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(save_arpa(model))
