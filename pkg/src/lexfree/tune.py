"""Random search over the decoder weights (alpha, beta, gamma) against dev-set WER."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .decoder import DecoderOptions, EmissionMatrix, TransitionMatrix, decode
from .errors import LexfreeError
from .evaluation import cer, wer
from .lexicon import smear

STATUS_OK = "ok"


@dataclass(frozen=True)
class SearchSpace:
    alpha_range: Tuple[float, float] = (0.0, 5.0)
    beta_range: Tuple[float, float] = (-5.0, 5.0)
    gamma_range: Tuple[float, float] = (-5.0, 5.0)
    n_trials: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha_range", "beta_range", "gamma_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy low < high, got ({lo}, {hi})")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")

    def sample(self) -> np.ndarray:
        """All ``n_trials`` (alpha, beta, gamma) rows, drawn up front so a
        prefix of trials is the same for any larger ``n_trials``."""
        rng = np.random.default_rng(self.seed)
        out = np.empty((self.n_trials, 3))
        for t in range(self.n_trials):
            for k, (lo, hi) in enumerate((self.alpha_range, self.beta_range, self.gamma_range)):
                out[t, k] = rng.uniform(lo, hi)
        return out


@dataclass
class TrialResult:
    trial_id: int
    alpha: float
    beta: float
    gamma: float
    wer: float
    cer: float
    status: str = STATUS_OK
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


def _run_trial(trial_id, params, dev, tr, lm, lex, base, backend) -> TrialResult:
    alpha, beta, gamma = (float(x) for x in params)
    opt = replace(base, alpha=alpha, beta=beta, gamma=gamma)
    start = time.perf_counter()
    try:
        hyps = [" ".join(decode(em, tr, lm, lex, opt, backend).words) for em, _ in dev]
    except (LexfreeError, ValueError) as exc:
        status = f"failed:{type(exc).__name__}"
        return TrialResult(trial_id, alpha, beta, gamma, math.nan, math.nan, status,
                           time.perf_counter() - start)
    refs = [ref for _, ref in dev]
    return TrialResult(trial_id, alpha, beta, gamma, wer(refs, hyps), cer(refs, hyps),
                       STATUS_OK, time.perf_counter() - start)


def best_trial(trials: Sequence[TrialResult]) -> Optional[TrialResult]:
    """Lowest WER, then lowest CER, then lowest trial index; ``None`` if every trial failed."""
    ok = [t for t in trials if t.ok]
    if not ok:
        return None
    return min(ok, key=lambda t: (t.wer, t.cer, t.trial_id))


def random_search(dev: Sequence[Tuple[EmissionMatrix, str]], lm, lex, base: DecoderOptions,
                  space: SearchSpace = SearchSpace(), tr: Optional[TransitionMatrix] = None,
                  threads: int = 1, backend: Optional[str] = None):
    """Decode ``dev`` (pairs of emissions and reference text) once per sampled triple.

    Returns ``(best options or None, trials)`` with trials ordered by index.
    """
    if not dev:
        raise ValueError("dev set is empty")
    if base.smearing and lex is not None and lex.smear_scores is None:
        smear(lex, lm)  # once, before workers share the trie
    params = space.sample()
    args = [(t, params[t], dev, tr, lm, lex, base, backend) for t in range(space.n_trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trials: List[TrialResult] = list(pool.map(lambda a: _run_trial(*a), args))
    else:
        trials = [_run_trial(*a) for a in args]
    best = best_trial(trials)
    best_opt = None if best is None else replace(base, alpha=best.alpha, beta=best.beta, gamma=best.gamma)
    return best_opt, trials


def _num(x: float) -> str:
    return "nan" if math.isnan(x) else repr(x)


def format_trial_log(trials: Sequence[TrialResult]) -> str:
    """Trial log TSV; wall time is left out so logs are byte-reproducible."""
    lines = ["trial_id\talpha\tbeta\tgamma\twer\tcer\tstatus"]
    for t in trials:
        lines.append(f"{t.trial_id}\t{t.alpha!r}\t{t.beta!r}\t{t.gamma!r}\t{_num(t.wer)}\t{_num(t.cer)}\t{t.status}")
    return "\n".join(lines) + "\n"
