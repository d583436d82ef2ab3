"""Random initialization satisfying the independence/spherical-symmetry assumption.

Each neuron's weight vector (including its bias for deep networks) is drawn
independently from a spherically symmetric law that puts no mass on the zero
vector: either an isotropic Gaussian or the uniform law on a sphere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .nets import DeepParams, TwoLayerParams
from .rng import as_generator

__all__ = [
    "InitDistribution",
    "sample_vectors",
    "sample_two_layer",
    "sample_deep",
    "sign_uniformity_pvalue",
    "rotation_invariance_pvalue",
]

_KINDS = {"gaussian": "gaussian", "gaussianiid": "gaussian", "normal": "gaussian",
          "sphere": "sphere", "uniformsphere": "sphere", "uniform_sphere": "sphere"}


@dataclass(frozen=True)
class InitDistribution:
    """``kind`` is ``"gaussian"`` (parameter = std. dev.) or ``"sphere"`` (parameter = radius)."""

    kind: str = "gaussian"
    scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        kind = _KINDS.get(str(self.kind).lower().replace("-", "_"))
        if kind is None:
            raise ValueError(f"unknown init kind {self.kind!r}; expected 'gaussian' or 'sphere'")
        if not (np.isfinite(self.scale) and self.scale > 0):
            name = "radius" if kind == "sphere" else "scale"
            raise ValueError(f"{name} must be positive, got {self.scale}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def from_dict(cls, cfg: dict) -> "InitDistribution":
        kind = cfg.get("kind", "gaussian")
        scale = cfg.get("radius", cfg.get("scale", 1.0))
        return cls(kind=kind, scale=float(scale), seed=int(cfg.get("seed", 0)))

    def to_dict(self) -> dict:
        key = "radius" if self.kind == "sphere" else "scale"
        return {"kind": self.kind, key: self.scale, "seed": self.seed}


def sample_vectors(dist: InitDistribution, count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent draws of a ``dim``-dimensional weight vector."""
    G = rng.standard_normal((count, dim))
    if dist.kind == "gaussian":
        return dist.scale * G
    norms = np.linalg.norm(G, axis=1, keepdims=True)
    # a Gaussian draw of exact zero has probability 0; redraw defensively
    while np.any(norms == 0):
        bad = norms[:, 0] == 0
        G[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(G, axis=1, keepdims=True)
    return dist.scale * G / norms


def sample_two_layer(dist: InitDistribution, n: int, d: int, stream=0) -> TwoLayerParams:
    """Width-``n`` bias-free two-layer network on ``R^d``.

    ``stream`` is a trial index, a stream name, or a ``numpy`` generator.
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = as_generator(dist.seed, stream)
    W = sample_vectors(dist, n, d, rng)
    v = sample_vectors(dist, n, 1, rng)[:, 0]
    return TwoLayerParams(W, v)


def sample_deep(dist: InitDistribution, layer_sizes: Sequence[int], stream=0) -> DeepParams:
    """Deep network with sizes ``[d, n_1, ..., n_{h-1}, k]``.

    Every hidden neuron draws ``(w, b)`` jointly in dimension fan-in + 1;
    output rows are drawn in dimension ``n_{h-1}``.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 3 or min(sizes) < 1:
        raise ValueError(f"layer sizes must be [d, n_1, ..., k] with at least one hidden layer, got {sizes}")
    rng = as_generator(dist.seed, stream)
    hidden = []
    for fan_in, width in zip(sizes[:-2], sizes[1:-1]):
        wb = sample_vectors(dist, width, fan_in + 1, rng)
        hidden.append((wb[:, :fan_in], wb[:, fan_in]))
    output = sample_vectors(dist, sizes[-1], sizes[-2], rng)
    return DeepParams(tuple(hidden), output)


def sign_uniformity_pvalue(vectors: np.ndarray) -> float:
    """Chi-square p-value for the coordinate-sign vectors being uniform on the cube."""
    vectors = np.asarray(vectors)
    dim = vectors.shape[1]
    codes = (vectors > 0).astype(np.int64) @ (1 << np.arange(dim, dtype=np.int64))
    counts = np.bincount(codes, minlength=2**dim)
    return float(stats.chisquare(counts).pvalue)


def rotation_invariance_pvalue(vectors: np.ndarray, u, u_rotated) -> float:
    """Two-sample KS p-value comparing ``<w,u>/|w|`` against ``<w,u'>/|w|``.

    The two halves of ``vectors`` are used for the two samples so that they
    are independent.
    """
    vectors = np.asarray(vectors)
    unit = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    half = len(unit) // 2
    u = np.asarray(u, float) / np.linalg.norm(u)
    u2 = np.asarray(u_rotated, float) / np.linalg.norm(u_rotated)
    return float(stats.ks_2samp(unit[:half] @ u, unit[half:] @ u2).pvalue)
