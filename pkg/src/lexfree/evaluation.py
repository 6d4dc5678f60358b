"""WER/CER scoring, IV/OOV utterance splits and OOV-word recovery rates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

from . import kernels
from .errors import LengthMismatch

MATCH, SUB, INS, DEL = "match", "sub", "ins", "del"
_OP_NAMES = (MATCH, SUB, INS, DEL)


def edit_distance(ref: Sequence, hyp: Sequence, backend: Optional[str] = None):
    """Unit-cost Levenshtein distance and one optimal alignment.

    The alignment is a list of ``(op, ref_index, hyp_index)`` with ``op`` in
    ``match/sub/ins/del`` and -1 for the side an insertion or deletion lacks.
    """
    dist, ops = kernels.get(backend).edit_ops(list(ref), list(hyp))
    return dist, [(_OP_NAMES[op], i, j) for op, i, j in ops]


def _words(x) -> list:
    return x.split() if isinstance(x, str) else list(x)


def _chars(x) -> str:
    # one separator between words
    return " ".join(_words(x))


@dataclass
class UttErrors:
    ref_len: int
    sub: int = 0
    ins: int = 0
    dele: int = 0

    @property
    def errors(self) -> int:
        return self.sub + self.ins + self.dele


def count_errors(ref: Sequence, hyp: Sequence) -> UttErrors:
    _, ops = edit_distance(ref, hyp)
    e = UttErrors(len(ref))
    for op, _, _ in ops:
        if op == SUB:
            e.sub += 1
        elif op == INS:
            e.ins += 1
        elif op == DEL:
            e.dele += 1
    return e


def _pooled(refs, hyps, split) -> float:
    if len(refs) != len(hyps):
        raise LengthMismatch(f"{len(refs)} references vs {len(hyps)} hypotheses")
    errors = total = 0
    for r, h in zip(refs, hyps):
        r, h = split(r), split(h)
        errors += edit_distance(r, h)[0]
        total += len(r)
    if total == 0:
        return 0.0 if errors == 0 else float("inf")
    return 100.0 * errors / total


def wer(refs: Sequence, hyps: Sequence) -> float:
    """Corpus word error rate in percent (edits pooled over all utterances)."""
    return _pooled(refs, hyps, _words)


def cer(refs: Sequence, hyps: Sequence) -> float:
    """Corpus character error rate in percent, words joined by one space."""
    return _pooled(refs, hyps, _chars)


@dataclass
class CorpusEval:
    wer: float
    cer: float
    n_utts: int
    n_ref_words: int
    n_ref_chars: int
    utterances: List[UttErrors] = field(default_factory=list)


def evaluate(refs: Sequence, hyps: Sequence) -> CorpusEval:
    if len(refs) != len(hyps):
        raise LengthMismatch(f"{len(refs)} references vs {len(hyps)} hypotheses")
    utts = [count_errors(_words(r), _words(h)) for r, h in zip(refs, hyps)]
    return CorpusEval(
        wer=wer(refs, hyps),
        cer=cer(refs, hyps),
        n_utts=len(refs),
        n_ref_words=sum(len(_words(r)) for r in refs),
        n_ref_chars=sum(len(_chars(r)) for r in refs),
        utterances=utts,
    )


def is_oov_utterance(ref, vocab) -> bool:
    return any(w not in vocab for w in _words(ref))


def split_iv_oov(utterances: Iterable, vocab: Iterable[str]):
    """Partition ``(ref, hyp, ...)`` tuples by whether the reference has an OOV word."""
    vocab = set(vocab)
    iv, oov = [], []
    for u in utterances:
        (oov if is_oov_utterance(u[0], vocab) else iv).append(u)
    return iv, oov


@dataclass
class OOVReport:
    n_iv_utts: int
    n_oov_utts: int
    iv: Optional[CorpusEval]
    oov: Optional[CorpusEval]
    overall: CorpusEval
    n_oov_occurrences: int
    n_oov_recovered: int
    n_oov_types: int
    n_oov_types_recovered: int

    @property
    def oov_occurrence_recovery(self) -> float:
        return 100.0 * self.n_oov_recovered / self.n_oov_occurrences if self.n_oov_occurrences else 0.0

    @property
    def oov_type_recovery(self) -> float:
        return 100.0 * self.n_oov_types_recovered / self.n_oov_types if self.n_oov_types else 0.0

    def summary(self) -> str:
        def row(name, ev):
            if ev is None:
                return f"{name:<8}{'-':>8}{'-':>8}{0:>8}"
            return f"{name:<8}{ev.wer:>8.2f}{ev.cer:>8.2f}{ev.n_utts:>8}"

        lines = [
            f"{'split':<8}{'WER':>8}{'CER':>8}{'utts':>8}",
            row("IV", self.iv),
            row("OOV", self.oov),
            row("all", self.overall),
            "",
            f"oov_occurrences={self.n_oov_occurrences}",
            f"oov_occurrence_recovery={self.oov_occurrence_recovery:.2f}",
            f"oov_types={self.n_oov_types}",
            f"oov_type_recovery={self.oov_type_recovery:.2f}",
        ]
        return "\n".join(lines) + "\n"


def oov_recovery(pairs: Sequence, vocab: Iterable[str]) -> OOVReport:
    """Recovery of OOV reference words: the aligned hypothesis word must match exactly."""
    vocab = set(vocab)
    occurrences = recovered = 0
    types_seen, types_hit = set(), set()
    for ref, hyp in ((p[0], p[1]) for p in pairs):
        r, h = _words(ref), _words(hyp)
        _, ops = edit_distance(r, h)
        for op, i, j in ops:
            if i < 0 or r[i] in vocab:
                continue
            occurrences += 1
            types_seen.add(r[i])
            if op == MATCH:
                recovered += 1
                types_hit.add(r[i])
    iv, oov = split_iv_oov(pairs, vocab)

    def ev(group):
        return evaluate([g[0] for g in group], [g[1] for g in group]) if group else None

    return OOVReport(
        n_iv_utts=len(iv),
        n_oov_utts=len(oov),
        iv=ev(iv),
        oov=ev(oov),
        overall=evaluate([p[0] for p in pairs], [p[1] for p in pairs]),
        n_oov_occurrences=occurrences,
        n_oov_recovered=recovered,
        n_oov_types=len(types_seen),
        n_oov_types_recovered=len(types_hit),
    )


def per_utterance_tsv(records: Sequence, vocab: Iterable[str]) -> str:
    """``(utt_id, ref, hyp)`` records as the per-utterance report TSV."""
    vocab = set(vocab)
    lines = ["utt_id\tref\thyp\tsub\tins\tdel\tis_oov_utt"]
    for utt, ref, hyp in records:
        e = count_errors(_words(ref), _words(hyp))
        lines.append(f"{utt}\t{ref}\t{hyp}\t{e.sub}\t{e.ins}\t{e.dele}\t{int(is_oov_utterance(ref, vocab))}")
    return "\n".join(lines) + "\n"
