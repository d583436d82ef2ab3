"""Constructive ingredients of the basin results: subset monotonicity,
output-preserving rescaling, and in-basin interpolation."""

from __future__ import annotations

import numpy as np

from ..nets import Dataset, TwoLayerParams
from .oracles import singleton_basin_oracle
from .patterns import extract_sign_pattern, is_singleton_dataset
from .solver import solve_basin_value

__all__ = [
    "KeyLemmaViolation",
    "basin_value",
    "key_lemma_check",
    "second_layer_rescaling_path",
    "basin_interpolation",
]


class KeyLemmaViolation(AssertionError):
    pass


def basin_value(params: TwoLayerParams, data: Dataset, loss=None, tol: float = 1e-8) -> float:
    """Value of the basin containing ``params``; exact on singleton data."""
    pattern = extract_sign_pattern(params, data)
    if is_singleton_dataset(data):
        return singleton_basin_oracle(pattern, data, loss)
    res = solve_basin_value(pattern, data, loss, tol=tol)
    if not res.converged:
        raise RuntimeError(f"basin solver did not converge ({res.message}, gap={res.gap:.3g})")
    return res.value


def key_lemma_check(params: TwoLayerParams, subset, data: Dataset, loss=None,
                    tol: float = 1e-8) -> tuple[float, float]:
    """Return ``(full_value, subset_value)``; raise if the full basin is worse.

    Keeping only the neurons in ``subset`` can never lower the basin value,
    since zeroing the others stays inside the closure of the full basin.
    """
    idx = sorted({int(i) for i in subset})
    if not idx:
        raise ValueError("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= params.n:
        raise ValueError(f"subset indices must lie in [0, {params.n})")
    full = basin_value(params, data, loss, tol)
    sub = full if len(idx) == params.n else basin_value(params.subset(idx), data, loss, tol)
    slack = 0.0 if is_singleton_dataset(data) else 2 * tol
    if full > sub + slack:
        raise KeyLemmaViolation(f"full-basin value {full!r} exceeds subset value {sub!r} for subset {idx}")
    return full, sub


def second_layer_rescaling_path(params: TwoLayerParams, steps: int = 100) -> list[TwoLayerParams]:
    """Output-preserving path from ``(W, v)`` to ``(|v| W, sign v)``.

    ``alpha_i = 1 - lam + lam |v_i|`` multiplies row ``w_i`` and divides
    ``v_i``.  Neurons with ``v_i = 0`` are cancelled, so their rows are first
    shrunk linearly to zero (a prefix of the path) and ``v_i`` stays 0.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    W, v = params.W, params.v
    dead = v == 0
    path = [params]
    if dead.any() and np.any(W[dead] != 0):
        for k in range(1, steps + 1):
            lam = k / steps
            Wk = W.copy()
            Wk[dead] = (1 - lam) * W[dead]
            path.append(TwoLayerParams(Wk, v.copy()))
        W = path[-1].W
    for k in range(1, steps + 1):
        lam = k / steps
        alpha = np.where(dead, 1.0, 1 - lam + lam * np.abs(v))
        path.append(TwoLayerParams(alpha[:, None] * W, v / alpha))
    return path


def basin_interpolation(paramsA: TwoLayerParams, paramsB: TwoLayerParams, lam: float,
                        data: Dataset | None = None) -> TwoLayerParams:
    """Interpolate two members of one basin so that ``v_i w_i`` moves linearly.

    ``v(lam) = lam vB + (1 - lam) vA`` and ``w_i(lam)`` is the matching
    weighted combination divided by ``v_i(lam)`` (plain linear interpolation
    when both ``v_i`` vanish).  With ``data`` the shared sign pattern is
    checked.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must lie in (0, 1), got {lam}")
    if paramsA.W.shape != paramsB.W.shape:
        raise ValueError(f"shapes differ: {paramsA.W.shape} vs {paramsB.W.shape}")
    if np.any(np.sign(paramsA.v) != np.sign(paramsB.v)):
        raise ValueError("output-weight signs differ, so the parameters are in different basins")
    if data is not None and extract_sign_pattern(paramsA, data) != extract_sign_pattern(paramsB, data):
        raise ValueError("sign patterns differ, so the parameters are in different basins")
    vA, vB, WA, WB = paramsA.v, paramsB.v, paramsA.W, paramsB.W
    v = lam * vB + (1 - lam) * vA
    both_zero = (vA == 0) & (vB == 0)
    safe = np.where(both_zero, 1.0, v)
    W_prod = (lam * vB[:, None] * WB + (1 - lam) * vA[:, None] * WA) / safe[:, None]
    W_lin = lam * WB + (1 - lam) * WA
    W = np.where(both_zero[:, None], W_lin, W_prod)
    return TwoLayerParams(W, v)
