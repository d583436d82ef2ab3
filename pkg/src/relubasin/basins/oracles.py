"""Reference basin values that do not use the numerical solver.

``singleton_basin_oracle`` is exact for datasets whose instances each have a
single nonzero coordinate.  ``grid_basin_oracle`` brute-forces tiny squared
loss instances (n <= 2, d <= 2) over neuron directions, optimizing the
non-negative radii in closed form.
"""

from __future__ import annotations

import numpy as np

from ..nets import Dataset, get_loss
from .patterns import SignPattern, basin_constraints, is_singleton_dataset
from .solver import EmptyBasin

__all__ = [
    "singleton_groups",
    "singleton_basin_oracle",
    "singleton_unconstrained_value",
    "grid_basin_oracle",
]

# achievable sets for u = sum_i b_i q_i with q_i >= 0
_ZERO, _NONNEG, _NONPOS, _REAL = "{0}", "[0,inf)", "(-inf,0]", "R"


def singleton_groups(data: Dataset) -> dict:
    """Map ``(j, side)`` to ``(instance indices, |x_tj|)`` for a singleton dataset."""
    if not is_singleton_dataset(data):
        bad = np.flatnonzero(np.count_nonzero(data.X, axis=1) != 1)
        raise ValueError(f"instances {bad[:5].tolist()} are not singletons")
    coord = np.argmax(data.X != 0, axis=1)
    vals = data.X[np.arange(data.m), coord]
    groups = {}
    for j in np.unique(coord):
        for side in (1, -1):
            idx = np.flatnonzero((coord == j) & (np.sign(vals) == side))
            if idx.size:
                groups[(int(j), side)] = (idx, np.abs(vals[idx]))
    return groups


def _minimize_1d(loss, scale, y, kind: str) -> float:
    """``min_u sum_t l(scale_t * u, y_t)`` over the achievable set ``kind``."""
    if kind == _ZERO:
        return float(np.sum(loss.pointwise(np.zeros_like(y), y)))

    def f(u):
        return float(np.sum(loss.pointwise(scale * u, y)))

    lo, hi = {_NONNEG: (0.0, None), _NONPOS: (None, 0.0), _REAL: (None, None)}[kind]
    if hasattr(loss, "scalar_minimizer"):
        u = loss.scalar_minimizer(scale, y)
        u = 0.0 if u is None else u
        if lo is not None:
            u = max(u, lo)
        if hi is not None:
            u = min(u, hi)
        return f(u)
    # generic convex loss: bracket then ternary search
    a = -1.0 if lo is None else lo
    b = 1.0 if hi is None else hi
    while lo is None and f(a) < f(a / 2 if a != 0 else 0):
        a *= 2
    while hi is None and f(b) < f(b / 2 if b != 0 else 0):
        b *= 2
    while b - a > 1e-12 * max(1.0, abs(a), abs(b)):
        m1, m2 = a + (b - a) / 3, b - (b - a) / 3
        if f(m1) <= f(m2):
            b = m2
        else:
            a = m1
    return f(0.5 * (a + b))


def _achievable(signs: np.ndarray) -> str:
    pos, neg = bool((signs > 0).any()), bool((signs < 0).any())
    return _REAL if pos and neg else _NONNEG if pos else _NONPOS if neg else _ZERO


def singleton_basin_oracle(pattern: SignPattern, data: Dataset, loss=None) -> float:
    """Exact basin value on a singleton dataset.

    On the instances ``S_j^+`` (resp. ``S_j^-``) whose nonzero coordinate is
    ``j`` with positive (negative) sign, the prediction is ``|x_tj| * u`` where
    ``u = sum b_i |v_i w_ij|`` over neurons active there; the reachable set of
    ``u`` depends only on which output signs occur among those neurons.
    """
    loss = get_loss(data.loss if loss is None else loss)
    if pattern.m != data.m:
        raise ValueError(f"pattern covers {pattern.m} instances but the dataset has {data.m}")
    groups = singleton_groups(data)
    cons = basin_constraints(pattern)
    A = pattern.A
    coord = np.argmax(data.X != 0, axis=1)
    # every instance on coordinate j must agree on sign(w_ij)
    for i in range(pattern.n):
        for j in np.unique(coord):
            idx = np.flatnonzero(coord == j)
            implied = A[i, idx] * np.sign(data.X[idx, j]).astype(int)
            if len(set(implied.tolist())) > 1:
                raise EmptyBasin(i, np.ones(len(idx)) / len(idx), idx)
    total = 0.0
    for (_j, _side), (idx, scale) in groups.items():
        t0 = idx[0]
        kind = _achievable(pattern.b[cons.active[:, t0]])
        total += _minimize_1d(loss, scale, data.y[idx], kind)
    return total / data.m


def singleton_unconstrained_value(data: Dataset, loss=None) -> float:
    """Average of the unconstrained per-side minima (the floor every basin shares)."""
    loss = get_loss(data.loss if loss is None else loss)
    return sum(_minimize_1d(loss, scale, data.y[idx], _REAL)
               for idx, scale in singleton_groups(data).values()) / data.m


# ---------------------------------------------------------------------------
# Grid oracle
# ---------------------------------------------------------------------------


def _directions(cons, i: int, X: np.ndarray, thetas: np.ndarray | None) -> np.ndarray:
    """Feasible unit directions for neuron ``i`` (rows), drawn from a candidate set."""
    d = X.shape[1]
    eq = np.flatnonzero(cons.equality[i] & (np.linalg.norm(X, axis=1) > 0))
    if d == 1:
        cand = np.array([[1.0], [-1.0]])
    elif eq.size:
        x = X[eq[0]]
        perp = np.array([-x[1], x[0]]) / np.linalg.norm(x)
        cand = np.vstack([perp, -perp])
    else:
        cand = np.column_stack([np.cos(thetas), np.sin(thetas)])
    H = cand @ X.T
    ok = np.ones(len(cand), bool)
    scale = np.linalg.norm(X, axis=1)
    if eq.size:
        ok &= np.all(np.abs(H[:, eq]) <= 1e-12 * scale[eq], axis=1)
    signs = cons.signs[i]
    ok &= np.all(signs * H >= -1e-12 * scale, axis=1)
    return cand[ok]


def _boundary_angles(X: np.ndarray) -> np.ndarray:
    ang = np.arctan2(X[:, 1], X[:, 0])
    return np.concatenate([ang + np.pi / 2, ang - np.pi / 2])


def _pair_values(a1: np.ndarray, a2: np.ndarray, y: np.ndarray, m: int) -> np.ndarray:
    """``min_{r >= 0} ||r1 a1 + r2 a2 - y||^2 / m`` for every row pair (broadcast).

    Candidate radii come from the closed-form two-column NNLS; residuals are
    then evaluated directly to avoid cancellation at large radii.
    """
    s11 = np.sum(a1 * a1, axis=-1)
    s22 = np.sum(a2 * a2, axis=-1)
    s12 = np.sum(a1 * a2, axis=-1)
    b1 = a1 @ y
    b2 = a2 @ y
    shape = np.broadcast(s11, s22).shape

    def resid(r1, r2):
        r1 = np.broadcast_to(r1, shape)[..., None]
        r2 = np.broadcast_to(r2, shape)[..., None]
        return np.sum((r1 * a1 + r2 * a2 - y) ** 2, axis=-1)

    with np.errstate(divide="ignore", invalid="ignore"):
        best = resid(0.0, 0.0)
        r1 = np.where(s11 > 0, np.maximum(b1 / np.where(s11 > 0, s11, 1), 0), 0)
        best = np.minimum(best, resid(r1, 0.0))
        r2 = np.where(s22 > 0, np.maximum(b2 / np.where(s22 > 0, s22, 1), 0), 0)
        best = np.minimum(best, resid(0.0, r2))
        det = s11 * s22 - s12 * s12
        good = det > 1e-14 * np.maximum(s11 * s22, 1e-300)
        q1 = np.where(good, (b1 * s22 - b2 * s12) / np.where(good, det, 1), -1)
        q2 = np.where(good, (b2 * s11 - b1 * s12) / np.where(good, det, 1), -1)
        both = good & (q1 >= 0) & (q2 >= 0)
        best = np.where(both, np.minimum(best, resid(np.where(both, q1, 0), np.where(both, q2, 0))), best)
    return best / m


def grid_basin_oracle(pattern: SignPattern, data: Dataset, step: float = 1e-2,
                      final_step: float = 1e-6, keep: int = 8) -> float:
    """Brute-force basin value for squared loss with ``n <= 2`` and ``d <= 2``.

    Each neuron's ``z_i`` is written ``r_i u_i``; the directions ``u_i`` run
    over an angle grid (plus the exact boundary angles) and the radii are
    optimized exactly.  The best grid cells are refined by factors of ten down
    to ``final_step``.
    """
    if get_loss(data.loss).name != "squared":
        raise ValueError("grid oracle supports squared loss only")
    if pattern.n > 2 or data.d > 2:
        raise ValueError("grid oracle is limited to n <= 2 and d <= 2")
    cons = basin_constraints(pattern)
    X, y, m = data.X, data.y, data.m
    sig = cons.active.astype(float)
    xn = np.linalg.norm(X, axis=1)

    def act(Dir, i):
        H = Dir @ X.T
        # boundary directions: rounding must not leak a sliver of the wrong sign
        H[np.abs(H) <= 1e-12 * xn] = 0.0
        return H * sig[i]

    def values(t1, t2):
        D1 = _directions(cons, 0, X, t1)
        A1 = act(D1, 0) if len(D1) else np.zeros((1, m))
        if pattern.n == 2:
            D2 = _directions(cons, 1, X, t2)
            A2 = act(D2, 1) if len(D2) else np.zeros((1, m))
        else:
            D2 = np.zeros((1, X.shape[1]))
            A2 = np.zeros((1, m))
        if cons.clamped[0]:
            A1 = np.zeros((1, m))
        if pattern.n == 2 and cons.clamped[1]:
            A2 = np.zeros((1, m))
        V = _pair_values(A1[:, None, :], A2[None, :, :], y, m)
        return V, D1, D2

    if data.d == 1:
        return float(values(None, None)[0].min())

    bnd = _boundary_angles(X)
    grid = np.concatenate([np.arange(0, 2 * np.pi, step), bnd])
    V, D1, D2 = values(grid, grid)
    best = float(V.min())
    h = step
    flat = np.argsort(V, axis=None)[:keep]
    seeds = [(np.arctan2(*D1[i][::-1]) if len(D1) else 0.0,
              np.arctan2(*D2[j][::-1]) if len(D2) else 0.0)
             for i, j in zip(*np.unravel_index(flat, V.shape))]
    while h > final_step:
        h_new = h / 10
        new = []
        for th1, th2 in seeds:
            local = np.arange(-20, 21) * h_new
            V, D1, D2 = values(np.concatenate([th1 + local, bnd]), np.concatenate([th2 + local, bnd]))
            if V.size == 0:
                continue
            best = min(best, float(V.min()))
            i, j = np.unravel_index(int(np.argmin(V)), V.shape)
            new.append((np.arctan2(*D1[i][::-1]) if len(D1) else 0.0,
                        np.arctan2(*D2[j][::-1]) if len(D2) else 0.0))
        seeds = new or seeds
        h = h_new
    return best
