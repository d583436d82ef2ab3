"""ReLU networks, losses and objective evaluation.

Two architectures are supported:

* ``TwoLayerParams`` -- bias-free, scalar-output networks
  ``x -> sum_i v_i * relu(<w_i, x>)``.
* ``DeepParams`` -- fully connected ReLU networks of any depth with biases on
  the hidden layers and a purely linear (bias-free) output layer.

The objective is always the average of a loss that is convex in the
prediction, evaluated on the ``m x k`` prediction matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Dataset",
    "TwoLayerParams",
    "DeepParams",
    "SquaredLoss",
    "CrossEntropySoftmax",
    "LossKind",
    "get_loss",
    "relu",
    "forward_two_layer",
    "forward_deep",
    "prediction_matrix",
    "objective",
    "objective_at_scale",
    "objective_params",
    "two_layer_gradient",
    "scale_output",
]


class ShapeError(ValueError):
    """Raised when array dimensions of parameters and data disagree."""


def relu(z):
    # relu(0) == 0; np.maximum keeps -0.0 out of the result
    return np.maximum(z, 0.0) + 0.0


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D array, got shape {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# Data and parameter containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    """Training sample ``S = (x_t, y_t)``.

    ``y`` is a length-``m`` vector of scalar targets, an ``m x k`` matrix of
    vector targets, or (for cross-entropy) a length-``m`` vector of class
    indices in ``[0, k)``.
    """

    X: np.ndarray
    y: np.ndarray
    loss: str = "squared"
    k: int | None = None
    cluster_ids: np.ndarray | None = None
    provenance: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = _as_matrix(self.X, "X")
        m, d = X.shape
        if m < 1 or d < 1:
            raise ShapeError(f"dataset needs m >= 1 and d >= 1, got X of shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        y = np.array(self.y, dtype=float)
        if y.ndim == 0 or y.shape[0] != m:
            raise ShapeError(f"targets have shape {y.shape}, expected leading dimension {m}")
        loss = get_loss(self.loss).name
        if loss == "cross_entropy":
            if y.ndim != 1 or np.any(y != np.round(y)) or np.any(y < 0):
                raise ValueError("cross-entropy targets must be non-negative class indices")
            k = int(self.k) if self.k is not None else int(y.max()) + 1
            if y.max() >= k:
                raise ValueError(f"class index {int(y.max())} out of range for k={k}")
        else:
            k = 1 if y.ndim == 1 else y.shape[1]
            if self.k is not None and int(self.k) != k:
                raise ShapeError(f"k={self.k} disagrees with targets of shape {y.shape}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "loss", loss)
        object.__setattr__(self, "k", k)
        if self.cluster_ids is not None:
            ids = np.asarray(self.cluster_ids, dtype=int)
            if ids.shape != (m,):
                raise ShapeError(f"cluster_ids has shape {ids.shape}, expected ({m},)")
            if ids.min() < 1 or ids.max() > d:
                raise ValueError("cluster ids must lie in [1..k] with k <= d")
            ids.setflags(write=False)
            object.__setattr__(self, "cluster_ids", ids)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class TwoLayerParams:
    """Bias-free two-layer network ``(W, v)``; row ``i`` of ``W`` is ``w_i``."""

    W: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        W = _as_matrix(self.W, "W")
        v = np.array(self.v, dtype=float).reshape(-1)
        if W.shape[0] < 1 or W.shape[0] != v.shape[0]:
            raise ShapeError(f"W has {W.shape[0]} rows but v has length {v.shape[0]}")
        W.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def k(self) -> int:
        return 1

    def subset(self, idx: Sequence[int]) -> "TwoLayerParams":
        idx = list(idx)
        return TwoLayerParams(self.W[idx], self.v[idx])


@dataclass(frozen=True, eq=False)
class DeepParams:
    """ReLU network of any depth.

    ``hidden`` holds ``(W_i, b_i)`` for every hidden layer; ``output`` is the
    ``k x n_{h-1}`` bias-free output matrix.
    """

    hidden: tuple
    output: np.ndarray

    def __post_init__(self):
        layers = []
        prev = None
        for i, (W, b) in enumerate(self.hidden):
            W = _as_matrix(W, f"hidden[{i}].W")
            b = np.array(b, dtype=float).reshape(-1)
            if b.shape[0] != W.shape[0]:
                raise ShapeError(f"layer {i}: W has {W.shape[0]} rows, bias has length {b.shape[0]}")
            if prev is not None and W.shape[1] != prev:
                raise ShapeError(f"layer {i}: expects input of size {W.shape[1]}, previous layer has {prev}")
            prev = W.shape[0]
            W.setflags(write=False)
            b.setflags(write=False)
            layers.append((W, b))
        if not layers:
            raise ShapeError("a deep network needs at least one hidden layer")
        out = _as_matrix(self.output, "output")
        if out.shape[1] != prev:
            raise ShapeError(f"output layer expects {out.shape[1]} inputs, last hidden layer has {prev}")
        out.setflags(write=False)
        object.__setattr__(self, "hidden", tuple(layers))
        object.__setattr__(self, "output", out)

    @property
    def d(self) -> int:
        return self.hidden[0][0].shape[1]

    @property
    def k(self) -> int:
        return self.output.shape[0]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.d] + [W.shape[0] for W, _ in self.hidden] + [self.k]


Params = Union[TwoLayerParams, DeepParams]


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


class SquaredLoss:
    """``l(p, y) = ||p - y||^2``."""

    name = "squared"

    def per_example(self, P: np.ndarray, y: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        Y = np.asarray(y, dtype=float).reshape(P.shape[0], -1)
        return np.sum((P - Y) ** 2, axis=1)

    def grad(self, P: np.ndarray, y: np.ndarray) -> np.ndarray:
        Y = np.asarray(y, dtype=float).reshape(P.shape[0], -1)
        return 2.0 * (P - Y)

    # scalar-prediction helpers used by the basin solver
    def pointwise(self, p, y):
        return (np.asarray(p) - y) ** 2

    def d1(self, p, y):
        return 2.0 * (np.asarray(p) - y)

    def d2(self, p, y):
        return np.full(np.shape(p), 2.0)

    def scalar_minimizer(self, scale, y):
        """Minimizer of ``sum_t l(scale_t * u, y_t)`` over ``u`` in R, or None if flat."""
        s2 = float(np.dot(scale, scale))
        if s2 == 0.0:
            return None
        return float(np.dot(scale, y)) / s2

    def __repr__(self):
        return "SquaredLoss()"


def _logsumexp_rows(P: np.ndarray) -> np.ndarray:
    # max-shifted; scipy's version carries heavy per-call overhead on small arrays
    mx = P.max(axis=1, keepdims=True)
    mx = np.where(np.isfinite(mx), mx, 0.0)
    return mx + np.log(np.sum(np.exp(P - mx), axis=1, keepdims=True))


class CrossEntropySoftmax:
    """Softmax cross-entropy with class-index targets, computed in log space."""

    name = "cross_entropy"

    def per_example(self, P: np.ndarray, y: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        if P.ndim != 2 or P.shape[1] < 2:
            raise ShapeError(f"cross-entropy needs at least two outputs, got predictions of shape {P.shape}")
        idx = np.asarray(y).astype(int)
        return _logsumexp_rows(P)[:, 0] - P[np.arange(P.shape[0]), idx]

    def grad(self, P: np.ndarray, y: np.ndarray) -> np.ndarray:
        idx = np.asarray(y).astype(int)
        Q = np.exp(P - _logsumexp_rows(P))
        Q[np.arange(P.shape[0]), idx] -= 1.0
        return Q

    def __repr__(self):
        return "CrossEntropySoftmax()"


LossKind = Union[SquaredLoss, CrossEntropySoftmax]

_LOSSES = {
    "squared": SquaredLoss,
    "squaredloss": SquaredLoss,
    "mse": SquaredLoss,
    "cross_entropy": CrossEntropySoftmax,
    "crossentropy": CrossEntropySoftmax,
    "crossentropysoftmax": CrossEntropySoftmax,
    "ce": CrossEntropySoftmax,
}


def get_loss(loss) -> LossKind:
    if isinstance(loss, (SquaredLoss, CrossEntropySoftmax)):
        return loss
    key = str(loss).lower().replace("-", "_")
    if key not in _LOSSES:
        key = key.replace("_", "")
    try:
        return _LOSSES[key]()
    except KeyError:
        raise ValueError(f"unknown loss {loss!r}; expected 'squared' or 'cross_entropy'") from None


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def forward_two_layer(params: TwoLayerParams, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != params.d:
        raise ShapeError(f"input has length {x.shape[0]} but W has shape {params.W.shape}")
    return float(params.v @ relu(params.W @ x))


def _dense(O: np.ndarray, W: np.ndarray) -> np.ndarray:
    # row-wise reduction: each output row is computed identically whatever the batch size
    return np.sum(O[:, None, :] * W[None, :, :], axis=2)


def _forward_deep_batch(params: DeepParams, X: np.ndarray) -> np.ndarray:
    O = X
    for W, b in params.hidden:
        O = relu(_dense(O, W) + b)
    return _dense(O, params.output)


def forward_deep(params: DeepParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != params.d:
        raise ShapeError(f"input has length {x.shape[0]} but first layer has shape {params.hidden[0][0].shape}")
    return _forward_deep_batch(params, x[None, :])[0]


def prediction_matrix(params: Params, data) -> np.ndarray:
    """``m x k`` matrix whose row ``t`` is the network output on ``x_t``."""
    X = data.X if isinstance(data, Dataset) else _as_matrix(data, "X")
    if X.shape[0] < 1:
        raise ShapeError("prediction matrix needs at least one instance")
    if X.shape[1] != params.d:
        raise ShapeError(f"data has d={X.shape[1]} but parameters expect d={params.d}")
    if isinstance(params, TwoLayerParams):
        return (relu(X @ params.W.T) @ params.v)[:, None]
    return _forward_deep_batch(params, X)


def scale_output(params: Params, c: float) -> Params:
    """Multiply the output-layer weights by ``c``."""
    if isinstance(params, TwoLayerParams):
        return TwoLayerParams(params.W, c * params.v)
    return DeepParams(params.hidden, c * params.output)


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------


def objective(loss, P, targets) -> float:
    loss = get_loss(loss)
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    targets = np.asarray(targets)
    if P.shape[0] != targets.shape[0]:
        raise ShapeError(f"prediction matrix has {P.shape[0]} rows but there are {targets.shape[0]} targets")
    if not np.all(np.isfinite(P)):
        raise ValueError("prediction matrix contains non-finite entries")
    return float(np.mean(loss.per_example(P, targets)))


def objective_at_scale(loss, P, targets, c: float) -> float:
    if not np.isfinite(c):
        raise ValueError(f"scale must be finite, got {c}")
    return objective(loss, c * np.asarray(P, dtype=float), targets)


def objective_params(params: Params, data: Dataset, loss=None) -> float:
    loss = data.loss if loss is None else loss
    return objective(loss, prediction_matrix(params, data), data.y)


def two_layer_gradient(params: TwoLayerParams, data: Dataset, loss=None):
    """Closed-form gradient of the objective w.r.t. ``(W, v)``.

    Uses the convention ``relu'(0) = 0``.
    """
    loss = get_loss(data.loss if loss is None else loss)
    H = data.X @ params.W.T  # m x n pre-activations
    A = relu(H)
    P = (A @ params.v)[:, None]
    g = loss.grad(P, data.y)[:, 0] / data.m
    grad_v = A.T @ g
    grad_W = ((H > 0) * g[:, None] * params.v[None, :]).T @ data.X
    return grad_W, grad_v
