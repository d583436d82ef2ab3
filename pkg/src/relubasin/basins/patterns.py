"""Sign patterns and the convex z-space form of the in-basin objective."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..nets import Dataset, TwoLayerParams, get_loss

__all__ = [
    "SignPattern",
    "BasinConstraints",
    "extract_sign_pattern",
    "basin_constraints",
    "z_objective",
    "z_from_params",
    "params_from_z",
    "z_feasibility_residual",
    "pattern_hash",
    "is_singleton_dataset",
]

SIGN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SignPattern:
    """``A[j, t] = sign<w_j, x_t>`` and ``b[j] = sign(v_j)``, entries in {-1, 0, +1}."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=np.int8)
        b = np.array(self.b, dtype=np.int8).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise ValueError(f"pattern shapes disagree: A {A.shape}, b {b.shape}")
        if not (np.isin(A, (-1, 0, 1)).all() and np.isin(b, (-1, 0, 1)).all()):
            raise ValueError("pattern entries must lie in {-1, 0, +1}")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    @property
    def boundary(self) -> bool:
        return bool((self.A == 0).any() or (self.b == 0).any())

    def subset(self, idx) -> "SignPattern":
        idx = list(idx)
        return SignPattern(self.A[idx], self.b[idx])

    def __eq__(self, other):
        if not isinstance(other, SignPattern):
            return NotImplemented
        return (self.A.shape == other.A.shape and np.array_equal(self.A, other.A)
                and np.array_equal(self.b, other.b))

    def __hash__(self):
        return int(pattern_hash(self), 16)


def pattern_hash(pattern: SignPattern) -> str:
    """Canonical 64-bit hash of ``(A, b)`` as 16 hex digits."""
    h = hashlib.blake2b(digest_size=8)
    h.update(np.array(pattern.A.shape, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(pattern.A, dtype=np.int8).tobytes())
    h.update(np.ascontiguousarray(pattern.b, dtype=np.int8).tobytes())
    return h.hexdigest()


def extract_sign_pattern(params: TwoLayerParams, data) -> SignPattern:
    X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if X.shape[1] != params.d:
        raise ValueError(f"data has d={X.shape[1]} but W has shape {params.W.shape}")
    H = params.W @ X.T
    scale = np.linalg.norm(params.W, axis=1)[:, None] * np.linalg.norm(X, axis=1)[None, :]
    A = np.sign(H)
    A[np.abs(H) < SIGN_TOL * scale] = 0
    A[scale == 0] = 0
    return SignPattern(A.astype(np.int8), np.sign(params.v).astype(np.int8))


def is_singleton_dataset(data) -> bool:
    X = data.X if isinstance(data, Dataset) else np.asarray(data)
    return bool(np.all(np.count_nonzero(X, axis=1) == 1))


@dataclass(frozen=True, eq=False)
class BasinConstraints:
    """Homogeneous halfspace description of a basin in z-space.

    For neuron ``i`` the cone is ``s[i, t] * <z_i, x_t> >= 0`` wherever
    ``s[i, t] = b_i * a_{i,t}`` is nonzero and ``<z_i, x_t> = 0`` on boundary
    entries (``a_{i,t} = 0``).  Neurons with ``b_i = 0`` are clamped to
    ``z_i = 0``.  ``active[i, t]`` says whether ``x_t`` reaches the output
    through neuron ``i``.
    """

    pattern: SignPattern
    signs: np.ndarray
    active: np.ndarray
    equality: np.ndarray
    clamped: np.ndarray

    @property
    def n(self) -> int:
        return self.pattern.n


def basin_constraints(pattern: SignPattern) -> BasinConstraints:
    A = pattern.A.astype(float)
    b = pattern.b.astype(float)
    clamped = b == 0
    signs = b[:, None] * A
    active = (pattern.A == 1) & ~clamped[:, None]
    equality = (pattern.A == 0) & ~clamped[:, None]
    return BasinConstraints(pattern, signs, active, equality, clamped)


def _predictions(cons: BasinConstraints, Z: np.ndarray, X: np.ndarray) -> np.ndarray:
    H = X @ np.asarray(Z, dtype=float).T  # m x n
    return np.sum(H * cons.active.T, axis=1)


def z_objective(constraints: BasinConstraints, Z, data: Dataset, loss=None) -> float:
    """``(1/m) sum_t l(sum_i sigma_{i,t} <z_i, x_t>, y_t)``."""
    loss = get_loss(data.loss if loss is None else loss)
    p = _predictions(constraints, Z, data.X)
    return float(np.mean(loss.per_example(p[:, None], data.y)))


def z_feasibility_residual(constraints: BasinConstraints, Z, data: Dataset) -> float:
    """Largest violation of the z-space cone constraints, in units of ``||x_t||``."""
    Z = np.asarray(Z, dtype=float)
    xn = np.linalg.norm(data.X, axis=1)
    xn = np.where(xn > 0, xn, 1.0)
    H = (Z @ data.X.T) / xn[None, :]
    viol = np.where(constraints.equality, np.abs(H), np.maximum(0.0, -constraints.signs * H))
    if constraints.clamped.any():
        viol[constraints.clamped] = np.linalg.norm(Z[constraints.clamped], axis=1)[:, None]
    return float(viol.max(initial=0.0))


def z_from_params(params: TwoLayerParams) -> np.ndarray:
    return params.v[:, None] * params.W


def params_from_z(Z, b) -> TwoLayerParams:
    """Balanced preimage of ``Z``: ``|v_i| = ||w_i|| = sqrt(||z_i||)`` and ``sign v_i = b_i``.

    Rows with ``z_i = 0`` map to ``w_i = 0, v_i = b_i``.
    """
    Z = np.asarray(Z, dtype=float)
    b = np.asarray(b, dtype=float)
    norms = np.linalg.norm(Z, axis=1)
    root = np.sqrt(norms)
    v = np.where(norms > 0, b * root, b)
    safe = np.where(norms > 0, v, 1.0)
    W = np.where((norms > 0)[:, None], Z / safe[:, None], 0.0)
    return TwoLayerParams(W, v)
