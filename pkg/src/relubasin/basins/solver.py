"""Basin values by constrained convex minimization in z-space.

Inside the closure of a basin the objective is a convex function of the
products ``z_i = v_i * w_i`` restricted to a product of polyhedral cones, one
per neuron.  ``solve_basin_value`` minimizes it in three stages:

1. a primal-dual interior-point QP solve (``cvxopt``) in a reduced
   coordinate system (row space of X, boundary equalities eliminated);
2. active-set polishing: constraints that are (nearly) tight are imposed as
   equalities and the equality-constrained problem is solved to machine
   precision, giving an exactly feasible point;
3. a dual certificate: if the gradient at the polished point lies in the dual
   cone (checked with non-negative least squares), ``f(z) - <grad, z>`` is a
   lower bound on the basin value, and the gap ``<grad, z>`` certifies the
   returned value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cvxopt
import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, nnls

from ..nets import Dataset, TwoLayerParams, get_loss
from .patterns import (
    SignPattern,
    basin_constraints,
    params_from_z,
    pattern_hash,
    z_feasibility_residual,
    z_objective,
)

__all__ = ["EmptyBasin", "BasinSolveResult", "solve_basin_value", "empty_basin_certificate"]


class EmptyBasin(ValueError):
    """The sign pattern describes an empty region of parameter space.

    ``certificate`` holds non-negative weights ``y`` over the neuron's strict
    constraints with ``sum_t y_t s_t x_t`` in the span of its equality rows,
    which rules out a strictly feasible point (Gordan's alternative).
    """

    def __init__(self, neuron: int, certificate: np.ndarray, instances: np.ndarray):
        self.neuron = int(neuron)
        self.certificate = certificate
        self.instances = instances
        super().__init__(f"basin is empty: neuron {neuron} has no strictly feasible weight "
                         f"(Farkas weights on instances {instances.tolist()})")


@dataclass
class BasinSolveResult:
    value: float
    z_star: np.ndarray
    feasibility_residual: float
    grad_residual: float
    iterations: int
    converged: bool
    lower_bound: float = -np.inf
    gap: float = np.inf
    pattern_hash: str = ""
    b: np.ndarray = field(default=None, repr=False)
    message: str = ""

    def params(self) -> TwoLayerParams:
        return params_from_z(self.z_star, self.b)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "lower_bound": self.lower_bound,
            "gap": self.gap,
            "feasibility_residual": self.feasibility_residual,
            "grad_residual": self.grad_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "pattern_hash": self.pattern_hash,
            "message": self.message,
        }


# ---------------------------------------------------------------------------
# Problem assembly
# ---------------------------------------------------------------------------


class _Block:
    """One free neuron: ``z_i = Q @ N @ eta_i``."""

    def __init__(self, neuron, basis, rows, row_inst):
        self.neuron = neuron
        self.basis = basis  # d x r_i, orthonormal columns
        self.rows = rows  # normalized constraint rows in eta coordinates
        self.row_inst = row_inst


class _Problem:
    def __init__(self, pattern: SignPattern, data: Dataset):
        cons = basin_constraints(pattern)
        X = data.X
        self.cons = cons
        self.data = data
        self.n, self.d = pattern.n, data.d
        _, s, Vt = np.linalg.svd(X, full_matrices=False)
        rank = int(np.sum(s > 1e-12 * s[0])) if s.size and s[0] > 0 else 0
        Q = Vt[:rank].T  # d x r
        Xr = X @ Q
        xnorm = np.linalg.norm(X, axis=1)
        self.blocks: list[_Block] = []
        cols = []
        offset = 0
        for i in range(self.n):
            if cons.clamped[i] or not cons.active[i].any() or rank == 0:
                continue
            eq = np.flatnonzero(cons.equality[i] & (xnorm > 0))
            if eq.size:
                N = null_space(Xr[eq] / xnorm[eq, None])
            else:
                N = np.eye(rank)
            if N.shape[1] == 0:
                continue
            basis = Q @ N
            ineq = np.flatnonzero((cons.signs[i] != 0) & (xnorm > 0))
            R = cons.signs[i, ineq, None] * (X[ineq] @ basis) / xnorm[ineq, None]
            rn = np.linalg.norm(R, axis=1)
            keep = rn > 1e-13
            R = R[keep] / rn[keep, None]
            block = _Block(i, basis, R, ineq[keep])
            block.start, block.stop = offset, offset + basis.shape[1]
            block.row_start = sum(len(b.rows) for b in self.blocks)
            offset = block.stop
            self.blocks.append(block)
            cols.append(cons.active[i][:, None] * (X @ basis))
        self.D = offset
        self.M = np.hstack(cols) if cols else np.zeros((data.m, 0))
        K = sum(len(b.rows) for b in self.blocks)
        self.G = np.zeros((K, self.D))
        for b in self.blocks:
            self.G[b.row_start:b.row_start + len(b.rows), b.start:b.stop] = b.rows
        self.K = K

    def to_z(self, eta: np.ndarray) -> np.ndarray:
        Z = np.zeros((self.n, self.d))
        for b in self.blocks:
            Z[b.neuron] = b.basis @ eta[b.start:b.stop]
        return Z


def empty_basin_certificate(pattern: SignPattern, data: Dataset):
    """Return ``None`` if every neuron's open cone is nonempty, else ``(i, y, instances)``."""
    cons = basin_constraints(pattern)
    X = data.X
    xnorm = np.linalg.norm(X, axis=1)
    for i in range(pattern.n):
        if cons.clamped[i]:
            continue
        strict = np.flatnonzero(cons.signs[i] != 0)
        if strict.size == 0:
            continue
        if np.any(xnorm[strict] == 0):
            bad = strict[xnorm[strict] == 0][:1]
            return i, np.ones(1), bad
        eq = np.flatnonzero(cons.equality[i] & (xnorm > 0))
        N = null_space(X[eq] / xnorm[eq, None]) if eq.size else np.eye(data.d)
        R = cons.signs[i, strict, None] * (X[strict] @ N) / xnorm[strict, None]
        if N.shape[1] > 0:
            guess = R.sum(axis=0)
            if np.all(R @ guess > 1e-9 * max(1.0, np.linalg.norm(guess))):
                continue
        # Gordan: exists y >= 0, sum y = 1, R^T y = 0  <=>  no eta with R eta > 0
        k = len(strict)
        A_eq = np.vstack([R.T, np.ones((1, k))]) if N.shape[1] else np.ones((1, k))
        b_eq = np.zeros(A_eq.shape[0])
        b_eq[-1] = 1.0
        res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
        if res.status == 0:
            y = res.x
            if N.shape[1] == 0 or np.linalg.norm(R.T @ y) <= 1e-8:
                return i, y, strict[y > 1e-12]
    return None


# ---------------------------------------------------------------------------
# Solver stages
# ---------------------------------------------------------------------------


def _loss_parts(loss, p, y, m):
    return loss.pointwise(p, y).sum() / m, loss.d1(p, y) / m, loss.d2(p, y) / m


def _interior_point(prob: _Problem, y: np.ndarray, max_iter: int):
    """Stage one: primal-dual interior-point QP (squared loss) for a near-optimal
    point and multipliers that identify the active constraints."""
    m = prob.data.m
    M, G = prob.M, prob.G
    scale = max(2.0 * np.linalg.norm(M, 2) ** 2 / m, 1e-300)
    # tiny ridge keeps the KKT system nonsingular along directions that
    # neither the objective nor any constraint sees; polishing removes its bias
    P = 2.0 * (M.T @ M) / m + 1e-12 * scale * np.eye(prob.D)
    q = -2.0 * (M.T @ y) / m
    opts = {"show_progress": False, "abstol": 1e-13, "reltol": 1e-13, "feastol": 1e-13,
            "maxiters": int(min(max_iter, 500))}
    if prob.K:
        sol = cvxopt.solvers.qp(cvxopt.matrix(P), cvxopt.matrix(q), cvxopt.matrix(-G),
                                cvxopt.matrix(np.zeros(prob.K)), options=opts)
        eta = np.array(sol["x"]).ravel()
        mu = np.array(sol["z"]).ravel()
        iters = int(sol["iterations"])
    else:
        eta = -np.linalg.lstsq(P, q, rcond=None)[0]
        mu = np.zeros(0)
        iters = 1
    return eta, mu, iters


def _min_norm_solve(A: np.ndarray, b: np.ndarray, cutoff: float) -> np.ndarray:
    """Least-squares solution ignoring singular values below an absolute ``cutoff``."""
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > cutoff
    return Vt[keep].T @ ((U[:, keep].T @ b) / s[keep])


def _solve_on_face(prob: _Problem, loss, y, active: np.ndarray, eta0: np.ndarray):
    """Minimize the objective subject to ``G[active] @ eta = 0`` starting from ``eta0``."""
    m = prob.data.m
    bases = []
    for b in prob.blocks:
        rows = b.rows[active[b.row_start:b.row_start + len(b.rows)]]
        Nb = null_space(rows) if len(rows) else np.eye(b.stop - b.start)
        bases.append(Nb)
    width = sum(Nb.shape[1] for Nb in bases)
    B = np.zeros((prob.D, width))
    col = 0
    for b, Nb in zip(prob.blocks, bases):
        B[b.start:b.stop, col:col + Nb.shape[1]] = Nb
        col += Nb.shape[1]
    MB = prob.M @ B
    cutoff = 1e-12 * max(np.linalg.norm(prob.M, 2), 1e-300) * np.sqrt(np.max(loss.d2(np.zeros(m), y) / m))
    zeta = B.T @ eta0
    iters = 0
    for _ in range(100):
        iters += 1
        p = MB @ zeta
        _, d1, d2 = _loss_parts(loss, p, y, m)
        w = np.sqrt(d2)
        step = _min_norm_solve(w[:, None] * MB, -d1 / w, cutoff) if width else zeta
        f0 = _loss_parts(loss, p, y, m)[0]
        t = 1.0
        slope = (MB.T @ d1) @ step
        while t > 1e-12 and _loss_parts(loss, MB @ (zeta + t * step), y, m)[0] > f0 + 1e-4 * t * slope:
            t *= 0.5
        zeta = zeta + t * step
        if np.linalg.norm(t * step) <= 1e-15 * (1.0 + np.linalg.norm(zeta)):
            break
    return B @ zeta, iters


def _project_to_face(prob: _Problem, active: np.ndarray, eta: np.ndarray):
    """Orthogonal projection of ``eta`` onto ``G[active] eta = 0``, growing ``active``
    until every other row is satisfied."""
    G = prob.G
    active = active.copy()
    x = eta
    for _ in range(prob.K + 1):
        x = eta.copy()
        for b in prob.blocks:
            rows = b.rows[active[b.row_start:b.row_start + len(b.rows)]]
            if len(rows):
                xb = x[b.start:b.stop]
                x[b.start:b.stop] = xb - np.linalg.pinv(rows) @ (rows @ xb)
        bad = ~active & (G @ x < 0)
        if not bad.any():
            break
        active |= bad
    # rows that now read exactly zero are tight as well
    active |= G @ x <= 0
    return x, active


def _dual_residual(prob: _Problem, q: np.ndarray, rows_mask: np.ndarray):
    """Per-block NNLS distance of the gradient ``q`` to the cone spanned by masked rows."""
    total = 0.0
    for b in prob.blocks:
        qb = q[b.start:b.stop]
        mask = rows_mask[b.row_start:b.row_start + len(b.rows)]
        R = b.rows[mask]
        if len(R) == 0:
            total = max(total, float(np.linalg.norm(qb)))
            continue
        _, res = nnls(R.T, qb)
        total = max(total, float(res))
    return total


def _signed_multipliers(prob: _Problem, q: np.ndarray, active: np.ndarray) -> np.ndarray:
    lam = np.zeros(prob.K)
    for b in prob.blocks:
        sl = slice(b.row_start, b.row_start + len(b.rows))
        mask = active[sl]
        if not mask.any():
            continue
        coef = np.linalg.lstsq(b.rows[mask].T, q[b.start:b.stop], rcond=None)[0]
        sub = np.zeros(len(b.rows))
        sub[mask] = coef
        lam[sl] = sub
    return lam


def solve_basin_value(pattern: SignPattern, data: Dataset, loss=None, tol: float = 1e-8,
                      max_iter: int = 100_000, check_empty: bool = True) -> BasinSolveResult:
    """Minimal objective value over the closure of the basin ``pattern``.

    The reported ``value`` is the objective at an exactly feasible point (an
    upper bound); ``lower_bound`` comes from the dual certificate, and
    ``converged`` requires ``gap <= tol`` and ``grad_residual <= tol``.

    Raises ``EmptyBasin`` when the open region described by the pattern is
    empty (only checked when ``check_empty``).
    """
    loss = get_loss(data.loss if loss is None else loss)
    if loss.name != "squared":
        raise ValueError("the z-space basin solver supports the squared loss only")
    if pattern.m != data.m:
        raise ValueError(f"pattern covers {pattern.m} instances but the dataset has {data.m}")
    if check_empty:
        cert = empty_basin_certificate(pattern, data)
        if cert is not None:
            raise EmptyBasin(*cert)
    cons = basin_constraints(pattern)
    prob = _Problem(pattern, data)
    y = data.y
    m = data.m
    h = pattern_hash(pattern)

    def finish(eta, iters, grad_res, lower, converged, msg):
        Z = prob.to_z(eta)
        value = z_objective(cons, Z, data, loss)
        feas = z_feasibility_residual(cons, Z, data)
        if np.isfinite(lower):
            lower = min(float(lower), value)  # rounding can push it a few ulps above
        gap = value - lower if np.isfinite(lower) else np.inf
        return BasinSolveResult(
            value=value, z_star=Z, feasibility_residual=feas, grad_residual=grad_res,
            iterations=iters, converged=bool(converged and feas <= 1e-10), lower_bound=lower,
            gap=gap, pattern_hash=h, b=pattern.b.astype(float), message=msg)

    if prob.D == 0:
        f0 = z_objective(cons, np.zeros((pattern.n, data.d)), data, loss)
        return finish(np.zeros(0), 0, 0.0, f0, True, "no free directions")

    eta, mu, iters = _interior_point(prob, y, max_iter)
    G = prob.G
    g = G @ eta
    scale = 1.0 + np.linalg.norm(eta)
    # interior-point iterates are strictly complementary: tight rows have mu > slack
    active = (mu > g) | (g <= 1e-9 * scale)
    x, active = _project_to_face(prob, active, eta)
    best = None
    # primal active-set iterations from an exactly feasible start: step towards
    # the face minimizer, stop at the first blocking row, drop rows whose
    # multipliers are negative once the face minimum is reached
    for _ in range(4 * prob.K + 20):
        target, extra = _solve_on_face(prob, loss, y, active, x)
        iters += extra
        dx = target - x
        g, Gd = G @ x, G @ dx
        cand = np.flatnonzero(~active & (Gd < -1e-14 * (1.0 + np.linalg.norm(dx))))
        if cand.size:
            ratios = np.maximum(g[cand], 0.0) / -Gd[cand]
            k = int(np.argmin(ratios))
            if ratios[k] < 1.0:
                x = x + ratios[k] * dx
                active[cand[k]] = True
                continue
        x = target
        p = prob.M @ x
        f, d1, _ = _loss_parts(loss, p, y, m)
        q = prob.M.T @ d1
        res = _dual_residual(prob, q, active)
        if res > tol:
            res = min(res, _dual_residual(prob, q, np.ones(prob.K, bool)))
        lower = f - float(q @ x)
        if best is None or f < _loss_parts(loss, prob.M @ best[0], y, m)[0] - 1e-15:
            best = (x, res, lower)
        if res <= tol:
            return finish(x, iters, res, lower, f - lower <= tol, "certified")
        lam = _signed_multipliers(prob, q, active)
        drop = np.flatnonzero(active & (lam < 0))
        if drop.size == 0:
            break
        active[drop[np.argmin(lam[drop])]] = False
    if best is None:
        return finish(eta, iters, np.inf, -np.inf, False, "polishing failed")
    eta_p, res, lower = best
    return finish(eta_p, iters, res, lower if res <= tol else -np.inf, False,
                  "dual certificate not attained")
