"""Explicit in-basin certificates for the full-rank and clustered results.

Both builders follow the same recipe: every target is claimed by the first
neuron that is active on it with a compatible output sign, per-neuron
target vectors are interpolated through a Gram solve, and the output layer
is replaced by ``sign(v)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from ..nets import Dataset, TwoLayerParams, get_loss, objective_params

__all__ = [
    "ConstructionResult",
    "claim_targets",
    "fullrank_construct",
    "clustered_bound",
    "noisy_pairs",
    "clustered_construct",
]

SIGN_TOL = 1e-9


@dataclass
class ConstructionResult:
    success: bool
    params: TwoLayerParams | None = None
    objective: float = float("nan")
    bound: float | None = None
    unclaimed: list = field(default_factory=list)
    noisy: list = field(default_factory=list)
    sign_compatible: bool | None = None
    max_output_error: float | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.success

    def to_dict(self) -> dict:
        return {"success": self.success, "objective": self.objective, "bound": self.bound,
                "unclaimed": list(self.unclaimed), "noisy": [list(p) for p in self.noisy],
                "sign_compatible": self.sign_compatible,
                "max_output_error": self.max_output_error, "message": self.message}


def claim_targets(H: np.ndarray, v: np.ndarray, targets: np.ndarray,
                  eligible: np.ndarray | None = None) -> tuple[np.ndarray, list[int]]:
    """First-claimant assignment.

    ``H[i, t] = <w_i, x_t>``.  Target ``t`` goes to the smallest ``i`` with
    ``H[i, t] > 0`` and ``v_i * targets[t] >= 0`` (and ``v_i != 0`` unless the
    target is zero).  Returns ``Y'`` (``n x m``, entries ``|target|`` or 0)
    and the list of unclaimed targets.
    """
    n, m = H.shape
    ok = (H > 0) & (v[:, None] * targets[None, :] >= 0)
    ok &= (v[:, None] != 0) | (targets[None, :] == 0)
    if eligible is not None:
        ok &= eligible[:, None]
    Yp = np.zeros((n, m))
    unclaimed = []
    for t in range(m):
        rows = np.flatnonzero(ok[:, t])
        if rows.size == 0:
            unclaimed.append(t)
        else:
            Yp[rows[0], t] = abs(targets[t])
    return Yp, unclaimed


def _sign_compatible(H_old: np.ndarray, H_new: np.ndarray, W_new: np.ndarray, X: np.ndarray) -> bool:
    scale = np.linalg.norm(W_new, axis=1)[:, None] * np.linalg.norm(X, axis=1)[None, :]
    s_new = np.where(np.abs(H_new) <= SIGN_TOL * np.maximum(scale, 1e-300), 0, np.sign(H_new))
    return bool(np.all(np.sign(H_old) * s_new >= 0))


def fullrank_construct(params: TwoLayerParams, data: Dataset, targets=None) -> ConstructionResult:
    """Interpolating network in the closure of the basin of ``params``.

    Fails (``success=False``) exactly when some instance has no claimant.
    """
    if params.k != 1:
        raise ValueError("the construction is for scalar-output two-layer networks")
    X = data.X
    y = data.y.astype(float) if targets is None else np.asarray(targets, float)
    gram = X @ X.T
    s = np.linalg.svd(X, compute_uv=False)
    if X.shape[0] > X.shape[1] or s[-1] <= 1e-10 * s[0]:
        raise np.linalg.LinAlgError("rank(X) < m: the instance Gram matrix is singular")
    H = params.W @ X.T
    Yp, unclaimed = claim_targets(H, params.v, y)
    if unclaimed:
        return ConstructionResult(False, unclaimed=unclaimed,
                                  message=f"no neuron claims instance(s) {unclaimed}")
    Acoef = np.linalg.solve(gram, Yp.T).T  # row i solves X X^T a_i = y'_i
    W_new = Acoef @ X
    built = TwoLayerParams(W_new, np.sign(params.v))
    H_new = W_new @ X.T
    out = built.v @ np.maximum(H_new, 0)
    err = float(np.max(np.abs(out - y)))
    compatible = _sign_compatible(H, H_new, W_new, X)
    fit = Dataset(X, y, loss=data.loss)
    value = objective_params(built, fit)
    ok = compatible and err <= 1e-8 * max(1.0, float(np.abs(y).max()))
    return ConstructionResult(ok, built, value, unclaimed=[], sign_compatible=compatible,
                              max_output_error=err,
                              message="" if ok else "constructed network failed verification")


def clustered_bound(data: Dataset, n: int) -> float:
    """``delta^2 ((1 + B/c) n sigma_max / sigma_min^2 ||y_hat|| + 2 gamma)^2``."""
    meta = data.meta
    ratio = meta["sigma_max"] / meta["sigma_min"] ** 2
    yn = float(np.linalg.norm(meta["y_hat"]))
    return meta["delta"] ** 2 * ((1 + meta["B"] / meta["c"]) * n * ratio * yn + 2 * meta["gamma"]) ** 2


def noisy_pairs(W: np.ndarray, data: Dataset) -> list[tuple[int, int]]:
    """``(neuron, cluster)`` pairs (0-based) with ``|<w/|w|, c_j>| <= delta_j``."""
    C = np.asarray(data.meta["centers"], float)
    radii = np.asarray(data.meta["radii"], float)
    norms = np.linalg.norm(W, axis=1)
    U = W / np.where(norms > 0, norms, 1)[:, None]
    hit = (np.abs(U @ C.T) <= radii[None, :]) | (norms[:, None] == 0)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(hit))]


def _project_cone(w: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Closest point to ``w`` in ``{u : G u >= 0}``.

    By Moreau's decomposition ``w = P_K(w) + P_{K°}(w)`` where the polar cone
    is generated by the rows of ``-G``.
    """
    if G.shape[0] == 0 or np.all(G @ w >= 0):
        return w.copy()
    lam, _ = nnls(-G.T, w)
    return w + G.T @ lam


def clustered_construct(params: TwoLayerParams, data: Dataset, strict: bool = False) -> ConstructionResult:
    """Certificate that the basin of ``params`` has value at most :func:`clustered_bound`.

    The good event requires every cluster to be claimed by a neuron outside
    all noisy regions.  Noisy neurons claim nothing, so their surrogate rows
    are zero (the subset argument lets them be ignored).  With
    ``strict=True`` any noisy hit fails the certificate instead.
    """
    if data.provenance != "clustered" or "centers" not in data.meta:
        raise ValueError("clustered_construct needs a dataset produced by gen_clustered")
    if get_loss(data.loss).name != "squared":
        raise ValueError("the clustered certificate is stated for the squared loss")
    meta = data.meta
    C = np.asarray(meta["centers"], float)
    y_hat = np.asarray(meta["y_hat"], float)
    W, v = params.W, params.v
    bound = clustered_bound(data, params.n)
    noisy = noisy_pairs(W, data)
    if strict and noisy:
        i, j = noisy[0]
        return ConstructionResult(False, bound=bound, noisy=noisy,
                                  message=f"neuron {i} lies in the noisy region of cluster {j + 1}")
    clean = np.ones(params.n, bool)
    for i, _ in noisy:
        clean[i] = False
    Yp, unclaimed = claim_targets(W @ C.T, v, y_hat, eligible=clean)
    if unclaimed:
        return ConstructionResult(False, bound=bound, noisy=noisy, unclaimed=[j + 1 for j in unclaimed],
                                  message=f"cluster(s) {[j + 1 for j in unclaimed]} have no clean claimant")
    s = np.linalg.svd(C, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise np.linalg.LinAlgError("cluster centers are not linearly independent")
    W_tilde = np.linalg.solve(C @ C.T, Yp.T).T @ C
    X = data.X
    H = W @ X.T
    S = np.sign(H)
    W_new = np.empty_like(W_tilde)
    for i in range(params.n):
        W_new[i] = _project_cone(W_tilde[i], S[i][:, None] * X)
    built = TwoLayerParams(W_new, np.sign(v))
    compatible = _sign_compatible(H, W_new @ X.T, W_new, X)
    value = objective_params(built, data)
    # absolute slack for rounding: at zero radius the bound is exactly 0
    ok = compatible and value <= bound + 1e-12 * (1.0 + float(np.sum(data.y ** 2)))
    msg = "" if ok else ("surrogate left the basin" if not compatible else
                         f"certificate value {value} exceeds the bound {bound}")
    return ConstructionResult(ok, built, value, bound=bound, noisy=noisy, sign_compatible=compatible,
                              message=msg)
