"""Strictly decreasing paths by rescaling the output layer.

Given endpoints with ``L1 < L0`` and ``L0 > L(0)``, every point of an arbitrary
continuous path between them has its output layer multiplied by the unique
factor that puts the objective exactly on a strictly decreasing target
schedule.  A final rescaling segment then brings the objective down to
``L1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .init import InitDistribution, sample_deep, sample_two_layer
from .montecarlo.stats import MCReport, run_trials, summarize
from .nets import (
    Dataset,
    DeepParams,
    Params,
    TwoLayerParams,
    get_loss,
    objective,
    objective_at_scale,
    objective_params,
    prediction_matrix,
    scale_output,
)

__all__ = [
    "NotFound",
    "NOT_FOUND",
    "PathError",
    "ConditionError",
    "PathSpec",
    "MonotonePathResult",
    "v_schedule",
    "condition1_margin",
    "rescale_root_find",
    "interpolate_params",
    "build_monotone_path",
    "prop1_bound",
    "check_condition2_probability",
]


class NotFound:
    """Returned by ``condition1_margin`` when no probed scale reaches the margin."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self):
        return False

    def __repr__(self):
        return "NotFound"


NOT_FOUND = NotFound()


class PathError(ValueError):
    pass


class ConditionError(PathError):
    """A hypothesis of the monotone-path theorem fails; ``condition`` is 1 or 2."""

    def __init__(self, condition: int, message: str, lam: float | None = None):
        self.condition = condition
        self.lam = lam
        super().__init__(message)


def v_schedule(lam: float, L0: float, Lzero: float, L1: float) -> float:
    """Target objective ``(1 - lam/3) L0 + (lam/3) max(L(0), L1)`` on ``[0, 1]``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    floor = max(Lzero, L1)
    if not L0 > floor:
        raise ValueError(f"need L0 > max(L(0), L1), got L0={L0}, L(0)={Lzero}, L1={L1}")
    return (1.0 - lam / 3.0) * L0 + (lam / 3.0) * floor


def condition1_margin(loss, P, targets, L0: float, eps: float, c_max: float = 1e8):
    """Smallest ``c`` in ``1, 2, 4, ...`` (up to ``c_max``) with ``L(cP) >= L0 + eps``."""
    if not c_max > 0:
        raise ValueError("c_max must be positive")
    c = 1.0
    while c <= c_max:
        if objective_at_scale(loss, P, targets, c) >= L0 + eps:
            return c
        c *= 2.0
    return NOT_FOUND


def rescale_root_find(loss, P, targets, v: float, c_hi: float) -> float:
    """The root of ``L(cP) = v`` on the increasing branch inside ``(0, c_hi)``.

    The minimizer ``c_min`` of the convex map ``c -> L(cP)`` on ``[0, c_hi]``
    is located by bounded golden-section search; the root is then bracketed
    by ``[c_min, c_hi]`` where the map is increasing.
    """

    def f(c):
        return objective_at_scale(loss, P, targets, c)

    f_hi = f(c_hi)
    if not f_hi > v:
        raise PathError(f"bracket fails: L(c_hi * P) = {f_hi!r} is not > v = {v!r} (c_hi={c_hi})")
    opt = minimize_scalar(f, bounds=(0.0, c_hi), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, c_hi)})
    c_min = float(opt.x)
    f0 = f(0.0)
    if f0 < f(c_min):
        c_min = 0.0
    f_min = f(c_min)
    if not f_min <= v:
        raise PathError(f"bracket fails: min over [0, c_hi] of L(c * P) is {f_min!r} > v = {v!r}")
    if f_min == v:
        return c_min
    c = brentq(lambda c: f(c) - v, c_min, c_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(c)


def interpolate_params(A: Params, B: Params, lam: float) -> Params:
    """Straight line ``(1 - lam) A + lam B`` in full parameter space."""
    if isinstance(A, TwoLayerParams) and isinstance(B, TwoLayerParams):
        if A.W.shape != B.W.shape:
            raise PathError(f"endpoint shapes differ: {A.W.shape} vs {B.W.shape}")
        return TwoLayerParams((1 - lam) * A.W + lam * B.W, (1 - lam) * A.v + lam * B.v)
    if isinstance(A, DeepParams) and isinstance(B, DeepParams):
        if A.layer_sizes != B.layer_sizes:
            raise PathError(f"endpoint architectures differ: {A.layer_sizes} vs {B.layer_sizes}")
        hidden = tuple(((1 - lam) * Wa + lam * Wb, (1 - lam) * ba + lam * bb)
                       for (Wa, ba), (Wb, bb) in zip(A.hidden, B.hidden))
        return DeepParams(hidden, (1 - lam) * A.output + lam * B.output)
    raise PathError("endpoints must both be two-layer or both be deep networks")


@dataclass
class PathSpec:
    start: Params
    end: Params
    N: int = 1000
    eps: float = 0.1
    path: Callable[[float], Params] | None = None  # defaults to the straight line

    def point(self, lam: float) -> Params:
        if self.path is not None:
            return self.path(lam)
        return interpolate_params(self.start, self.end, lam)


@dataclass
class MonotonePathResult:
    lams: np.ndarray
    c_tilde: np.ndarray
    objectives: np.ndarray
    targets: np.ndarray
    final_c: np.ndarray
    final_objectives: np.ndarray
    monotone: bool
    max_violation: float
    violations: int
    L0: float
    L1: float
    Lzero: float
    end_scale: float
    params: list = field(default_factory=list, repr=False)

    def all_objectives(self) -> np.ndarray:
        return np.concatenate([self.objectives, self.final_objectives[1:]])

    def rows(self) -> list[tuple]:
        """``(segment, lam, c, objective)`` rows for CSV export."""
        out = [("schedule", float(l), float(c), float(o))
               for l, c, o in zip(self.lams, self.c_tilde, self.objectives)]
        out += [("final", 1.0, float(c), float(o))
                for c, o in zip(self.final_c[1:], self.final_objectives[1:])]
        return out

    def verdict(self) -> dict:
        return {"monotone": bool(self.monotone), "max_violation": float(self.max_violation),
                "violations": int(self.violations), "L0": self.L0, "L1": self.L1,
                "L_zero": self.Lzero, "c_tilde_0": float(self.c_tilde[0]),
                "end_scale": float(self.end_scale), "final_objective": float(self.final_objectives[-1])}


def _zero_loss(loss, data: Dataset, k: int) -> float:
    return objective(loss, np.zeros((data.m, k)), data.y)


def build_monotone_path(spec: PathSpec, loss, data: Dataset, keep_params: bool = False) -> MonotonePathResult:
    """Rescaled path from ``spec.start`` to ``spec.end`` with strictly decreasing objective.

    Raises ``ConditionError`` when ``L1 >= L0`` is violated (condition 0 in the
    message), when ``L0 <= L(0)`` (condition 2), or when some grid point
    cannot be scaled above ``L0 + eps`` (condition 1).

    The closing segment rescales ``end`` from ``c_tilde(1)`` towards 1 and
    stops at the first scale whose objective equals ``L1``; that is the scale
    1 itself unless ``c -> L(c P(end))`` is minimized strictly beyond 1, in
    which case ``end_scale`` records where the segment stopped.
    """
    loss = get_loss(loss)
    if spec.N < 1:
        raise PathError("N must be >= 1")
    y = data.y
    P0 = prediction_matrix(spec.start, data)
    k = P0.shape[1]
    L0 = objective(loss, P0, y)
    P1 = prediction_matrix(spec.end, data)
    L1 = objective(loss, P1, y)
    Lzero = _zero_loss(loss, data, k)
    if not L1 < L0:
        raise PathError(f"endpoint objective L1={L1!r} is not strictly below L0={L0!r}")
    if not L0 > Lzero:
        raise ConditionError(2, f"condition 2 fails: L(P(W0))={L0!r} is not > L(0)={Lzero!r}")

    lams = np.linspace(0.0, 1.0, spec.N + 1)
    c_t = np.empty_like(lams)
    objs = np.empty_like(lams)
    targ = np.empty_like(lams)
    kept = []
    for i, lam in enumerate(lams):
        W = spec.point(float(lam))
        P = prediction_matrix(W, data)
        v = v_schedule(float(lam), L0, Lzero, L1)
        c_hi = condition1_margin(loss, P, y, L0, spec.eps)
        if c_hi is NOT_FOUND:
            raise ConditionError(1, f"condition 1 fails at lam={lam}: no scale c <= 1e8 gives "
                                    f"L(c P) >= L0 + eps = {L0 + spec.eps!r}", lam=float(lam))
        # at lam = 0 the target is L0 itself, attained at c = 1 on the increasing branch
        c = 1.0 if i == 0 else rescale_root_find(loss, P, y, v, c_hi)
        Wc = scale_output(W, c)
        c_t[i], targ[i] = c, v
        objs[i] = objective_params(Wc, data, loss)
        if keep_params:
            kept.append(Wc)

    # closing segment on the end point
    c1 = c_t[-1]

    def f(c):
        return objective_at_scale(loss, P1, y, c)

    if c1 >= 1.0:
        c_end = 1.0
        opt = minimize_scalar(f, bounds=(1.0, c1), method="bounded", options={"xatol": 1e-13 * c1})
        if f(float(opt.x)) < L1:
            # the map dips below L1 between 1 and c1: stop where it first reaches L1
            c_end = brentq(lambda c: f(c) - L1, float(opt.x), c1, xtol=1e-300,
                           rtol=4 * np.finfo(float).eps)
    else:
        opt = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-13})
        c_end = brentq(lambda c: f(c) - L1, max(float(opt.x), c1), 1.0, xtol=1e-300,
                       rtol=4 * np.finfo(float).eps) if f(c1) > L1 else c1
    final_c = np.linspace(c1, c_end, spec.N + 1)
    final_c[-1] = c_end
    final_objs = np.array([objective_params(scale_output(spec.end, c), data, loss) for c in final_c])
    if c_end == 1.0:
        final_objs[-1] = L1
    if keep_params:
        kept += [scale_output(spec.end, c) for c in final_c[1:]]

    seq = np.concatenate([objs, final_objs[1:]])
    diffs = np.diff(seq)
    violations = int(np.sum(diffs >= 0))
    max_violation = float(diffs.max()) if diffs.size else -np.inf
    return MonotonePathResult(
        lams=lams, c_tilde=c_t, objectives=objs, targets=targ, final_c=final_c,
        final_objectives=final_objs, monotone=violations == 0, max_violation=max_violation,
        violations=violations, L0=L0, L1=L1, Lzero=Lzero, end_scale=float(c_end), params=kept)


# ---------------------------------------------------------------------------
# Condition 2 under random initialization
# ---------------------------------------------------------------------------


def prop1_bound(last_width: int) -> float:
    """``(1 - 2^{-n_{h-1}}) / 2``."""
    return 0.5 * (1.0 - 2.0 ** (-int(last_width)))


class _Cond2Trial:
    def __init__(self, sizes, dist, loss, data):
        self.sizes, self.dist, self.loss, self.data = list(sizes), dist, get_loss(loss), data

    def __call__(self, index, rng):
        if len(self.sizes) == 3 and self.sizes[-1] == 1 and self.loss.name == "squared":
            params = sample_two_layer(self.dist, self.sizes[1], self.sizes[0], rng)
        else:
            params = sample_deep(self.dist, self.sizes, rng)
        P = prediction_matrix(params, self.data)
        L = objective(self.loss, P, self.data.y)
        Lz = _zero_loss(self.loss, self.data, P.shape[1])
        return {"event": bool(L > Lz), "L": L, "L_zero": Lz, "nonzero_predictions": bool(np.any(P != 0))}


def check_condition2_probability(layer_sizes, dist: InitDistribution, loss, data: Dataset,
                                 trials: int, seed: int | None = None, workers: int = 1) -> MCReport:
    """Estimate ``P[L(P(W0)) > L(0)]`` and compare with ``(1 - 2^{-n_{h-1}}) / 2``.

    ``layer_sizes`` is ``[d, n_1, ..., n_{h-1}, k]``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = dist.seed if seed is None else seed
    sizes = [int(s) for s in layer_sizes]
    records = run_trials(_Cond2Trial(sizes, dist, loss, data), trials, seed, workers)
    nonzero = [r["nonzero_predictions"] for r in records if not r.get("error")]
    return summarize("prop1", records, prop1_bound(sizes[-2]), "lower", seed,
                     params={"layer_sizes": sizes, "loss": get_loss(loss).name, "init": dist.to_dict()},
                     extra={"fraction_nonzero_predictions": float(np.mean(nonzero)) if nonzero else float("nan"),
                            "nonzero_bound": 1.0 - 2.0 ** (-sizes[-2])})
