"""Exact binomial confidence limits, verdicts, and the parallel trial runner."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from ..rng import trial_stream

__all__ = [
    "CONFIDENCE",
    "MCReport",
    "clopper_pearson",
    "decide_verdict",
    "run_trials",
    "summarize",
]

CONFIDENCE = 0.999
MAX_ERROR_FRACTION = 0.001


def clopper_pearson(successes: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """One-sided exact limits: ``P[p < lo] <= 1 - confidence`` and likewise for ``hi``."""
    if trials <= 0:
        return 0.0, 1.0
    s, n = int(successes), int(trials)
    alpha = 1.0 - confidence
    lo = 0.0 if s == 0 else float(stats.beta.ppf(alpha, s, n - s + 1))
    hi = 1.0 if s == n else float(stats.beta.ppf(1.0 - alpha, s + 1, n - s))
    return lo, hi


def decide_verdict(lower: float, upper: float, bound: float, direction: str,
                   errors: int, trials: int) -> str:
    """``direction='lower'`` means the theory claims ``p >= bound``; ``'upper'`` claims ``p <= bound``."""
    if trials == 0 or errors > MAX_ERROR_FRACTION * trials:
        return "INCONCLUSIVE"
    if direction == "lower":
        return "REFUTED" if upper < bound else "CONSISTENT"
    if direction == "upper":
        return "REFUTED" if lower > bound else "CONSISTENT"
    raise ValueError(f"direction must be 'lower' or 'upper', got {direction!r}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


@dataclass
class MCReport:
    bound_id: str
    trials: int
    successes: int
    errors: int
    estimate: float
    lower: float
    upper: float
    bound: float
    direction: str
    verdict: str
    seed: int
    confidence: float = CONFIDENCE
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def to_dict(self, with_diagnostics: bool = False) -> dict:
        d = asdict(self)
        if not with_diagnostics:
            d.pop("diagnostics")
        return _clean(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def summarize(bound_id: str, records: list[dict], bound: float, direction: str, seed: int,
              params: dict | None = None, extra: dict | None = None,
              diag_sample: int = 20) -> MCReport:
    """Aggregate per-trial records (each with ``event`` and optional ``error``)."""
    errors = sum(1 for r in records if r.get("error"))
    valid = [r for r in records if not r.get("error")]
    s = sum(1 for r in valid if r["event"])
    n = len(valid)
    lo, hi = clopper_pearson(s, n)
    verdict = decide_verdict(lo, hi, bound, direction, errors, len(records))
    return MCReport(
        bound_id=bound_id, trials=len(records), successes=s, errors=errors,
        estimate=s / n if n else float("nan"), lower=lo, upper=hi, bound=float(bound),
        direction=direction, verdict=verdict, seed=int(seed), params=dict(params or {}),
        extra=dict(extra or {}), diagnostics=records[:diag_sample])


def _call(fn, seed, prefix, index):
    try:
        rec = fn(index, trial_stream(seed, index, prefix))
    except Exception as exc:  # an errored trial is recorded, never counted as success or failure
        rec = {"event": False, "error": f"{type(exc).__name__}: {exc}"}
    rec.setdefault("trial", index)
    return rec


def run_trials(fn: Callable, trials: int, seed: int, workers: int = 1,
               prefix: str = "init/trial") -> list[dict]:
    """Evaluate ``fn(index, rng)`` for every trial; output order is by index.

    Each trial has its own named stream, so results do not depend on
    ``workers``.  ``fn`` must be picklable when ``workers > 1``.
    """
    if workers <= 1:
        return [_call(fn, seed, prefix, i) for i in range(trials)]
    from functools import partial

    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, trials // (8 * workers))
        return list(pool.map(partial(_call, fn, seed, prefix), range(trials), chunksize=chunk))
