"""Generators and validators for the special dataset constructions.

Every generator draws from a named stream (``dataset/<kind>``) of the given
seed unless an explicit generator is passed, attaches the constants its
theorem needs in ``Dataset.meta``, and runs its own validator before
returning.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .nets import Dataset, TwoLayerParams, objective_params
from .rng import as_generator

__all__ = [
    "DatasetValidationError",
    "SingletonHardnessSpec",
    "FullRankSpec",
    "ClusteredSpec",
    "LowRankSpec",
    "cluster_radius_bound",
    "gen_singleton_hardness",
    "gen_fullrank",
    "gen_clustered",
    "gen_lowrank_realizable",
    "p_epsilon",
    "validate_singleton",
    "validate_fullrank",
    "validate_clustered",
    "validate_lowrank",
    "spec_from_dict",
    "generate",
]

RANK_TOL = 1e-8


class DatasetValidationError(ValueError):
    pass


def _rng(seed, kind, rng):
    return rng if rng is not None else as_generator(seed, f"dataset/{kind}")


# ---------------------------------------------------------------------------
# Singleton hardness set
# ---------------------------------------------------------------------------


@dataclass
class SingletonHardnessSpec:
    d: int = 1
    eps: float = 0.1
    loss: str = "squared"


def gen_singleton_hardness(spec: SingletonHardnessSpec) -> Dataset:
    """``2d`` singleton instances: ``(0.5 e_j, sqrt(2 eps))`` and ``(-e_j, 1)`` per coordinate."""
    if spec.d < 1:
        raise DatasetValidationError(f"d must be >= 1, got {spec.d}")
    if not 0.0 < spec.eps < 0.25:
        raise DatasetValidationError(f"eps must lie in (0, 1/4), got {spec.eps}")
    if spec.loss != "squared":
        raise DatasetValidationError("the explicit hardness construction uses the squared loss")
    d = spec.d
    X = np.zeros((2 * d, d))
    y = np.empty(2 * d)
    for j in range(d):
        X[2 * j, j] = 0.5
        X[2 * j + 1, j] = -1.0
        y[2 * j] = math.sqrt(2 * spec.eps)
        y[2 * j + 1] = 1.0
    data = Dataset(X, y, loss="squared", provenance="singleton_hardness",
                   meta={"d": d, "eps": spec.eps, "good_value": spec.eps, "bad_value": 0.5})
    validate_singleton(data)
    return data


def validate_singleton(data: Dataset) -> dict:
    counts = np.count_nonzero(data.X, axis=1)
    if np.any(counts != 1):
        bad = np.flatnonzero(counts != 1)
        raise DatasetValidationError(f"instances {bad[:5].tolist()} are not singletons")
    return {"singleton": True, "m": data.m, "d": data.d}


# ---------------------------------------------------------------------------
# Full-rank data
# ---------------------------------------------------------------------------


@dataclass
class FullRankSpec:
    m: int = 5
    d: int = 8
    targets: Sequence[float] | None = None


def gen_fullrank(spec: FullRankSpec, seed: int = 0, rng=None) -> Dataset:
    """Gaussian rows (rank ``m`` almost surely, redrawn otherwise) and given or Gaussian targets."""
    m, d = spec.m, spec.d
    if m < 1 or d < 1:
        raise DatasetValidationError(f"need m, d >= 1, got m={m}, d={d}")
    if m > d:
        raise DatasetValidationError(f"full-rank data needs m <= d, got m={m}, d={d}")
    g = _rng(seed, "fullrank", rng)
    for _ in range(100):
        X = g.standard_normal((m, d))
        s = np.linalg.svd(X, compute_uv=False)
        if s[-1] > RANK_TOL * s[0]:
            break
    else:  # pragma: no cover - probability zero
        raise DatasetValidationError("could not draw a full-rank instance matrix")
    if spec.targets is None:
        y = g.standard_normal(m)
    else:
        y = np.asarray(spec.targets, dtype=float)
        if y.shape != (m,):
            raise DatasetValidationError(f"expected {m} targets, got shape {y.shape}")
    data = Dataset(X, y, provenance="fullrank", meta={"m": m, "d": d})
    data.meta.update(validate_fullrank(data))
    return data


def validate_fullrank(data: Dataset) -> dict:
    s = np.linalg.svd(data.X, compute_uv=False)
    rank = int(np.sum(s > RANK_TOL * s[0]))
    if rank != data.m:
        raise DatasetValidationError(f"rank(X) = {rank} but m = {data.m}")
    return {"rank": rank, "sigma_max": float(s[0]), "sigma_min": float(s[-1])}


# ---------------------------------------------------------------------------
# Clustered data
# ---------------------------------------------------------------------------


def cluster_radius_bound(d: int) -> float:
    """Largest allowed ``delta_j / ||c_j||``: ``2 sin(sqrt(2 pi) / (16 d sqrt(d)))``."""
    return 2.0 * math.sin(math.sqrt(2 * math.pi) / (16 * d * math.sqrt(d)))


@dataclass
class ClusteredSpec:
    d: int = 10
    k: int = 3
    counts: Sequence[int] | int = 10
    radius_fraction: float = 0.1  # delta_j = fraction * bound * ||c_j|| when radii are not given
    gamma: float = 1.0
    c: float = 1.0  # minimal center norm
    centers: Sequence[Sequence[float]] | None = None
    radii: Sequence[float] | None = None
    y_hat: Sequence[float] | None = None


def _uniform_ball(g, count, d, radius):
    if radius == 0 or count == 0:
        return np.zeros((count, d))
    u = g.standard_normal((count, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = radius * g.random(count) ** (1.0 / d)
    return u * r[:, None]


def gen_clustered(spec: ClusteredSpec, seed: int = 0, rng=None) -> Dataset:
    """Points uniform in balls around ``k <= d`` centers; targets ``y_hat_j + gamma <u_j, x - c_j>``."""
    d, k = spec.d, spec.k
    if not 1 <= k <= d:
        raise DatasetValidationError(f"need 1 <= k <= d, got k={k}, d={d}")
    if spec.c <= 0:
        raise DatasetValidationError("minimal center norm c must be positive")
    g = _rng(seed, "clustered", rng)
    if spec.centers is None:
        Q, _ = np.linalg.qr(g.standard_normal((d, k)))
        norms = spec.c * (1.0 + g.random(k))
        C = (Q * norms).T
    else:
        C = np.asarray(spec.centers, dtype=float)
        if C.shape != (k, d):
            raise DatasetValidationError(f"centers must have shape ({k}, {d}), got {C.shape}")
    cn = np.linalg.norm(C, axis=1)
    bound = cluster_radius_bound(d)
    radii = (np.asarray(spec.radii, float) if spec.radii is not None
             else spec.radius_fraction * bound * cn)
    if radii.shape != (k,) or np.any(radii < 0):
        raise DatasetValidationError(f"radii must be {k} non-negative numbers")
    for j in range(k):
        if radii[j] / cn[j] > bound * (1 + 1e-12):
            raise DatasetValidationError(
                f"cluster {j + 1}: delta/||c|| = {radii[j] / cn[j]:.6g} exceeds the bound "
                f"2*sin(sqrt(2*pi)/(16*d*sqrt(d))) = {bound:.6g}")
    counts = [int(spec.counts)] * k if np.isscalar(spec.counts) else [int(c) for c in spec.counts]
    if len(counts) != k or min(counts) < 1:
        raise DatasetValidationError(f"need {k} positive cluster sizes")
    y_hat = g.standard_normal(k) if spec.y_hat is None else np.asarray(spec.y_hat, float)
    U = g.standard_normal((k, d))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    Xs, ys, ids = [], [], []
    for j in range(k):
        pts = C[j] + _uniform_ball(g, counts[j], d, radii[j])
        Xs.append(pts)
        ys.append(y_hat[j] + spec.gamma * (pts - C[j]) @ U[j])
        ids += [j + 1] * counts[j]
    X = np.vstack(Xs)
    meta = {"centers": C.tolist(), "radii": radii.tolist(), "y_hat": y_hat.tolist(),
            "gamma": float(spec.gamma), "c": float(spec.c), "radius_bound": bound,
            "lipschitz_directions": U.tolist()}
    data = Dataset(X, np.concatenate(ys), cluster_ids=np.array(ids), provenance="clustered", meta=meta)
    data.meta.update(validate_clustered(data))
    return data


def validate_clustered(data: Dataset) -> dict:
    """Re-check the four clustering hypotheses and record the derived constants."""
    meta = data.meta
    C = np.asarray(meta["centers"], float)
    radii = np.asarray(meta["radii"], float)
    k, d = C.shape
    cn = np.linalg.norm(C, axis=1)
    bound = cluster_radius_bound(d)
    ids = np.asarray(data.cluster_ids) - 1
    dist = np.linalg.norm(data.X[:, None, :] - C[None, :, :], axis=2)  # m x k
    inside = dist <= radii[None, :] * (1 + 1e-12) + 1e-15
    for t in range(data.m):
        if not inside[t, ids[t]] or inside[t].sum() != 1:
            raise DatasetValidationError(f"instance {t} is not within the radius of exactly one center")
    if np.any(radii / cn > bound * (1 + 1e-12)):
        j = int(np.argmax(radii / cn))
        raise DatasetValidationError(f"cluster {j + 1}: delta/||c|| = {radii[j] / cn[j]:.6g} > bound {bound:.6g}")
    if np.any(cn < meta["c"] * (1 - 1e-12)):
        raise DatasetValidationError("a center norm is below c")
    gamma = meta["gamma"]
    for j in range(k):
        idx = np.flatnonzero(ids == j)
        Xi, yi = data.X[idx], data.y[idx]
        dx = np.linalg.norm(Xi[:, None] - Xi[None], axis=2)
        dy = np.abs(yi[:, None] - yi[None])
        if np.any(dy > gamma * dx + 1e-12 * (1 + np.abs(yi).max())):
            raise DatasetValidationError(f"targets in cluster {j + 1} are not {gamma}-Lipschitz")
    s = np.linalg.svd(C.T, compute_uv=False)
    return {"B": float(np.linalg.norm(data.X, axis=1).max()), "delta": float(radii.max()),
            "sigma_max": float(s[0]), "sigma_min": float(s[-1]),
            "max_center_distance": [float(dist[ids == j, j].max()) for j in range(k)]}


# ---------------------------------------------------------------------------
# Low-rank realizable data
# ---------------------------------------------------------------------------


@dataclass
class LowRankSpec:
    d: int = 5
    m: int = 20
    rank: int = 2
    n: int = 1  # teacher width
    B: float = 1.0


def gen_lowrank_realizable(spec: LowRankSpec, seed: int = 0, rng=None) -> tuple[Dataset, TwoLayerParams]:
    """Unit-norm instances spanning an ``r``-dim subspace, labelled by a planted teacher.

    Each teacher neuron satisfies ``|v_i| * ||w_i|| = B`` exactly.
    """
    d, m, r = spec.d, spec.m, spec.rank
    if not 1 <= r <= min(d, m):
        raise DatasetValidationError(f"need 1 <= rank <= min(d, m), got rank={r}, d={d}, m={m}")
    if spec.n < 1 or spec.B <= 0:
        raise DatasetValidationError("teacher width and B must be positive")
    g = _rng(seed, "lowrank", rng)
    U, _ = np.linalg.qr(g.standard_normal((d, r)))
    for _ in range(100):
        G = g.standard_normal((m, r))
        s = np.linalg.svd(G, compute_uv=False)
        if s[-1] > RANK_TOL * s[0]:
            break
    X = G @ U.T
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    W = g.standard_normal((spec.n, d))
    v = np.sign(g.standard_normal(spec.n))
    v[v == 0] = 1.0
    W *= (spec.B / np.linalg.norm(W, axis=1))[:, None]
    teacher = TwoLayerParams(W, v)
    y = (np.maximum(X @ W.T, 0.0) @ v)
    data = Dataset(X, y, provenance="lowrank",
                   meta={"rank": r, "B": spec.B, "teacher_width": spec.n, "teacher_W": W.tolist(),
                         "teacher_v": v.tolist()})
    data.meta.update(validate_lowrank(data, teacher, spec))
    return data, teacher


def validate_lowrank(data: Dataset, teacher: TwoLayerParams, spec: LowRankSpec) -> dict:
    s = np.linalg.svd(data.X, compute_uv=False)
    rank = int(np.sum(s > RANK_TOL * s[0]))
    if rank != spec.rank:
        raise DatasetValidationError(f"rank(X) = {rank}, expected {spec.rank}")
    if np.any(np.linalg.norm(data.X, axis=1) > 1 + 1e-12):
        raise DatasetValidationError("some instance has norm above 1")
    prod = np.abs(teacher.v) * np.linalg.norm(teacher.W, axis=1)
    if np.any(prod > spec.B * (1 + 1e-12)):
        raise DatasetValidationError("teacher violates |v_i| ||w_i|| <= B")
    loss = objective_params(teacher, data)
    if loss > 1e-24:
        raise DatasetValidationError(f"teacher objective {loss} is not zero")
    return {"teacher_objective": loss, "max_teacher_product": float(prod.max())}


def p_epsilon(eps: float, n: int, B: float, rank: int) -> float:
    """``(1/(2 pi (r-1))) * (sqrt(eps)/(nB) * sqrt(1 - eps/(4 n^2 B^2)))^(r-1)``."""
    if rank < 2:
        raise ValueError(f"rank must be >= 2, got {rank}")
    if eps < 0 or n < 1 or B <= 0:
        raise ValueError("need eps >= 0, n >= 1, B > 0")
    ratio = math.sqrt(eps) / (n * B)
    if ratio > 2:
        raise ValueError(f"sqrt(eps)/(nB) = {ratio} exceeds 2")
    base = ratio * math.sqrt(1.0 - eps / (4 * n * n * B * B))
    return base ** (rank - 1) / (2 * math.pi * (rank - 1))


# ---------------------------------------------------------------------------
# Dispatch used by the CLI
# ---------------------------------------------------------------------------

_SPECS = {"singleton": SingletonHardnessSpec, "fullrank": FullRankSpec,
          "clustered": ClusteredSpec, "lowrank": LowRankSpec}


def spec_from_dict(kind: str, cfg: dict | None):
    if kind not in _SPECS:
        raise ValueError(f"unknown dataset kind {kind!r}; expected one of {sorted(_SPECS)}")
    cls = _SPECS[kind]
    cfg = dict(cfg or {})
    allowed = set(cls.__dataclass_fields__)
    unknown = set(cfg) - allowed
    if unknown:
        raise ValueError(f"unknown {kind} parameter(s): {sorted(unknown)}; allowed: {sorted(allowed)}")
    return cls(**cfg)


def generate(kind: str, cfg: dict | None, seed: int = 0):
    """Return ``(dataset, teacher_or_None, spec)``."""
    spec = spec_from_dict(kind, cfg)
    if kind == "singleton":
        return gen_singleton_hardness(spec), None, spec
    if kind == "fullrank":
        return gen_fullrank(spec, seed), None, spec
    if kind == "clustered":
        return gen_clustered(spec, seed), None, spec
    data, teacher = gen_lowrank_realizable(spec, seed)
    return data, teacher, spec


def spec_to_dict(spec) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()}
