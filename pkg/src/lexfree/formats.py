"""Text formats for emissions, transitions and dataset manifests.

Emission file::

    W2E1
    tokens: a b |
    frames: 2
    -0.1 -2.3 -4.0
    -0.2 -1.9 -3.5

Scores are natural-log and written with ``repr`` so they read back bit-exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from .decoder import EmissionMatrix, TransitionMatrix
from .errors import ParseError
from .tokens import TokenSet

EMISSION_MAGIC = "W2E1"
TRANSITION_MAGIC = "W2T1"


def format_emissions(em: EmissionMatrix) -> str:
    lines = [EMISSION_MAGIC, "tokens: " + " ".join(em.token_set.tokens), f"frames: {em.frames}"]
    for row in em.scores:
        lines.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def parse_emissions(text: str) -> EmissionMatrix:
    lines = text.splitlines()
    if not lines or lines[0].strip() != EMISSION_MAGIC:
        raise ParseError(f"expected {EMISSION_MAGIC} header", 1)
    if len(lines) < 3 or not lines[1].startswith("tokens:"):
        raise ParseError("expected 'tokens:' line", 2)
    tokens = lines[1][len("tokens:"):].split()
    if not lines[2].startswith("frames:"):
        raise ParseError("expected 'frames:' line", 3)
    try:
        frames = int(lines[2][len("frames:"):])
    except ValueError:
        raise ParseError("frame count is not an integer", 3) from None
    rows = []
    for lineno, line in enumerate(lines[3:], start=4):
        if not line.strip():
            continue
        try:
            row = [float(x) for x in line.split()]
        except ValueError:
            raise ParseError("non-numeric score", lineno) from None
        if len(row) != len(tokens):
            raise ParseError(f"expected {len(tokens)} scores, got {len(row)}", lineno)
        rows.append(row)
    if len(rows) != frames:
        raise ParseError(f"header declares {frames} frames, found {len(rows)}", len(lines))
    scores = np.array(rows, dtype=np.float64).reshape(frames, len(tokens))
    return EmissionMatrix(scores, TokenSet.from_tokens(tokens))


def read_emissions(path) -> EmissionMatrix:
    return parse_emissions(Path(path).read_text(encoding="utf-8"))


def write_emissions(path, em: EmissionMatrix) -> None:
    Path(path).write_text(format_emissions(em), encoding="utf-8")


def format_transitions(tr: TransitionMatrix) -> str:
    lines = [TRANSITION_MAGIC]
    lines.extend(" ".join(repr(float(x)) for x in row) for row in tr.scores)
    return "\n".join(lines) + "\n"


def parse_transitions(text: str) -> TransitionMatrix:
    lines = [l for l in text.splitlines()]
    if not lines or lines[0].strip() != TRANSITION_MAGIC:
        raise ParseError(f"expected {TRANSITION_MAGIC} header", 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rows.append([float(x) for x in line.split()])
        except ValueError:
            raise ParseError("non-numeric score", lineno) from None
    if any(len(r) != len(rows) for r in rows):
        raise ParseError("transition matrix is not square", len(lines))
    return TransitionMatrix(np.array(rows, dtype=np.float64).reshape(len(rows), len(rows)))


def read_transitions(path) -> TransitionMatrix:
    return parse_transitions(Path(path).read_text(encoding="utf-8"))


def write_transitions(path, tr: TransitionMatrix) -> None:
    Path(path).write_text(format_transitions(tr), encoding="utf-8")


@dataclass
class ManifestEntry:
    utt_id: str
    emission_path: str
    reference: str


def read_manifest(path) -> List[ManifestEntry]:
    """``utt_id<TAB>emission_path<TAB>reference`` lines; relative paths resolve
    against the manifest's directory."""
    base = Path(path).parent
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise ParseError("expected utt_id<TAB>emission_path<TAB>reference", lineno)
        utt, emp = parts[0], parts[1]
        ref = parts[2] if len(parts) == 3 else ""
        if not Path(emp).is_absolute():
            emp = str(base / emp)
        entries.append(ManifestEntry(utt, emp, ref.strip()))
    return entries


def write_manifest(path, entries) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for e in entries:
            f.write(f"{e.utt_id}\t{e.emission_path}\t{e.reference}\n")
