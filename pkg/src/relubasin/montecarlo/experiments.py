"""Bound experiments: one event predicate and one closed-form bound per result.

``run_bound_experiment(bound_id, params, trials, seed, workers)`` is the
single entry point.  Datasets come from the ``dataset/<kind>`` stream of the
seed and stay fixed across trials; each trial draws its initialization from
``init/trial/<i>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from ..basins.oracles import singleton_basin_oracle, singleton_unconstrained_value
from ..basins.patterns import extract_sign_pattern
from ..basins.solver import solve_basin_value
from ..datasets import (ClusteredSpec, FullRankSpec, LowRankSpec, SingletonHardnessSpec,
                        cluster_radius_bound, gen_clustered, gen_fullrank,
                        gen_lowrank_realizable, gen_singleton_hardness, p_epsilon)
from ..init import InitDistribution, sample_two_layer, sample_vectors
from ..nets import Dataset, TwoLayerParams, objective
from ..rng import stream
from .constructions import clustered_construct, fullrank_construct
from .stats import MCReport, clopper_pearson, decide_verdict, run_trials, summarize

__all__ = [
    "BoundSpec",
    "BOUND_SPECS",
    "DEFAULT_PARAMS",
    "DEFAULT_TRIALS",
    "QUICK_TRIALS",
    "run_bound_experiment",
    "cap_bound_check",
    "cap_exact_d3",
    "noisy_region_check",
    "Census",
    "appc_local_minima_census",
]

MIN_TRIALS = 100
SOLVER_SLACK = 1e-6


@dataclass(frozen=True)
class BoundSpec:
    bound_id: str
    theorem: str
    direction: str  # "lower": P[event] >= bound; "upper": P[event] <= bound
    bound: Callable[[dict], float]
    event: str

    def value(self, params: dict) -> float:
        b = float(self.bound(params))
        if not 0.0 <= b <= 1.0:
            # the formulas can go negative for tiny widths; the claim is then vacuous
            b = min(max(b, 0.0), 1.0)
        return b


def _prop1_bound(p):
    return 0.5 * (1.0 - 2.0 ** (-int(p["widths"][-1])))


def _thm4_width(p) -> int:
    pe = p_epsilon(p["eps"], p["teacher_width"], p["B"], p["rank"])
    return int(p["c"] * math.ceil(p["teacher_width"] / pe))


def cap_lower_bound(d: int, delta: float) -> float:
    """``(1/(pi (d-1))) (delta sqrt(1 - delta^2/4))^(d-1)``."""
    return (delta * math.sqrt(max(0.0, 1 - delta * delta / 4))) ** (d - 1) / (math.pi * (d - 1))


def cap_exact_d3(delta: float) -> float:
    """Exact cap fraction on the 2-sphere: ``(1 - cos(2 arcsin(delta/2))) / 2``."""
    return (1 - math.cos(2 * math.asin(min(delta, 2.0) / 2))) / 2


BOUND_SPECS: dict[str, BoundSpec] = {
    "prop1": BoundSpec("prop1", "Proposition 1", "lower", _prop1_bound, "L(P(W0)) > L(0)"),
    "thm3": BoundSpec("thm3", "Theorem 3", "lower",
                      lambda p: 1 - 2 * p["d"] * 0.75 ** p["n"], "Bas <= alpha (exact oracle)"),
    "thm4": BoundSpec("thm4", "Theorem 4", "lower",
                      lambda p: 1 - math.exp(-p["c"] * p["teacher_width"] / 4), "Bas <= eps (solver)"),
    "thm5": BoundSpec("thm5", "Theorem 5", "lower",
                      lambda p: 1 - p["m"] * 0.75 ** p["n"], "Bas <= alpha (construction or solver)"),
    "thm6": BoundSpec("thm6", "Theorem 6", "lower",
                      lambda p: 1 - p["d"] * 0.875 ** p["n"], "Bas <= clustered bound (certificate or solver)"),
    "thm7": BoundSpec("thm7", "Theorem 7", "upper",
                      lambda p: math.exp(-p["d"] / 16), "Bas(w) <= 1/8"),
    "cap": BoundSpec("cap", "Claim 1", "lower",
                     lambda p: cap_lower_bound(p["d"], p["delta"]), "||a - b|| <= delta"),
    "noisy": BoundSpec("noisy", "Lemma 7", "lower",
                       lambda p: 1 - 1 / (4 * p["d"]), "w outside the noisy region"),
}

DEFAULT_PARAMS: dict[str, dict] = {
    "prop1": {"widths": [4, 6, 3], "d": 5, "m": 10, "loss": "squared", "classes": 3},
    "thm3": {"d": 5, "n": 20, "eps": 0.1, "solver_crosscheck": 100},
    "thm4": {"d": 5, "m": 20, "rank": 2, "teacher_width": 1, "B": 1.0, "eps": 0.25, "c": 2},
    "thm5": {"m": 5, "d": 8, "n": 15, "solver_check": -1},
    "thm6": {"k": 3, "d": 10, "n": 40, "counts": 10, "radius_fraction": 0.1, "gamma": 1.0, "c": 1.0,
             "solver_check": 20},
    "thm7": {"d": 16, "eps": 0.1, "oracle_crosscheck": 200},
    "cap": {"d": 3, "delta": 0.5},
    "noisy": {"d": 10, "center_norm": 1.0, "radius_fraction": 1.0},
}

DEFAULT_TRIALS = {"prop1": 10_000, "thm3": 10_000, "thm4": 200, "thm5": 2_000, "thm6": 500,
                  "thm7": 10_000, "cap": 1_000_000, "noisy": 100_000}
QUICK_TRIALS = {"prop1": 1_000, "thm3": 1_000, "thm4": 100, "thm5": 200, "thm6": 100,
                "thm7": 1_000, "cap": 100_000, "noisy": 10_000}


def _merge(bound_id: str, params: dict | None) -> dict:
    if bound_id not in BOUND_SPECS:
        raise ValueError(f"unknown bound {bound_id!r}; expected one of {sorted(BOUND_SPECS)}")
    merged = dict(DEFAULT_PARAMS[bound_id])
    allowed = set(merged) | {"init"}
    for key, val in (params or {}).items():
        if key not in allowed:
            raise ValueError(f"unknown parameter {key!r} for bound {bound_id}; allowed: {sorted(allowed)}")
        merged[key] = val
    return merged


def _dist(p: dict) -> InitDistribution:
    return InitDistribution.from_dict(p.get("init") or {})


# ---------------------------------------------------------------------------
# Per-trial predicates (module-level classes so that they pickle)
# ---------------------------------------------------------------------------


class _Thm3Trial:
    def __init__(self, data, dist, n, alpha, crosscheck):
        self.data, self.dist, self.n, self.alpha, self.crosscheck = data, dist, n, alpha, crosscheck

    def __call__(self, index, rng):
        params = sample_two_layer(self.dist, self.n, self.data.d, rng)
        pattern = extract_sign_pattern(params, self.data)
        value = singleton_basin_oracle(pattern, self.data)
        rec = {"event": bool(value <= self.alpha + 1e-12), "value": value}
        if index < self.crosscheck:
            res = solve_basin_value(pattern, self.data)
            rec["solver_value"] = res.value
            rec["solver_event"] = bool(res.value <= self.alpha + SOLVER_SLACK)
        return rec


class _Thm4Trial:
    def __init__(self, data, dist, width, eps):
        self.data, self.dist, self.width, self.eps = data, dist, width, eps

    def __call__(self, index, rng):
        params = sample_two_layer(self.dist, self.width, self.data.d, rng)
        res = solve_basin_value(extract_sign_pattern(params, self.data), self.data)
        if not res.converged:
            raise RuntimeError(f"solver did not certify the basin value ({res.message})")
        return {"event": bool(res.value <= self.eps), "value": res.value, "gap": res.gap}


class _Thm5Trial:
    def __init__(self, data, dist, n, alpha, solver_check):
        self.data, self.dist, self.n, self.alpha, self.solver_check = data, dist, n, alpha, solver_check

    def __call__(self, index, rng):
        params = sample_two_layer(self.dist, self.n, self.data.d, rng)
        cons = fullrank_construct(params, self.data)
        rec = {"construct": cons.success, "construct_objective": cons.objective,
               "unclaimed": len(cons.unclaimed)}
        check = self.solver_check < 0 or index < self.solver_check
        if check or not cons.success:
            res = solve_basin_value(extract_sign_pattern(params, self.data), self.data)
            rec["solver_value"] = res.value
            rec["solver_event"] = bool(res.value <= self.alpha + SOLVER_SLACK)
        rec["event"] = bool(cons.success or rec.get("solver_event", False))
        return rec


class _Thm6Trial:
    def __init__(self, data, dist, n, solver_check):
        self.data, self.dist, self.n, self.solver_check = data, dist, n, solver_check

    def __call__(self, index, rng):
        params = sample_two_layer(self.dist, self.n, self.data.d, rng)
        cons = clustered_construct(params, self.data)
        rec = {"construct": cons.success, "certificate": cons.objective, "bound": cons.bound,
               "noisy_hits": len(cons.noisy), "unclaimed": len(cons.unclaimed)}
        if index < self.solver_check or not cons.success:
            res = solve_basin_value(extract_sign_pattern(params, self.data), self.data)
            rec["solver_value"] = res.value
            rec["solver_event"] = bool(res.value <= cons.bound + SOLVER_SLACK)
        rec["event"] = bool(cons.success or rec.get("solver_event", False))
        return rec


class _Thm7Trial:
    """``Bas(w)`` of a single neuron (output weight fixed to +1).

    Coordinates decouple, so the value is the mean of exact one-dimensional
    basin values selected by ``sign(w_j)``; a prefix of trials is re-checked
    with the full oracle.
    """

    def __init__(self, data, dist, good, bad, threshold, crosscheck):
        self.data, self.dist = data, dist
        self.good, self.bad, self.threshold, self.crosscheck = good, bad, threshold, crosscheck

    def __call__(self, index, rng):
        w = sample_vectors(self.dist, 1, self.data.d, rng)[0]
        k = int(np.sum(w > 0))  # positive coordinate -> the bad one-dimensional basin
        d = self.data.d
        value = (k * self.bad + (d - k) * self.good) / d
        rec = {"event": bool(value <= self.threshold + 1e-12), "value": value, "bad_coordinates": k}
        if index < self.crosscheck:
            params = TwoLayerParams(w[None, :], np.ones(1))
            rec["oracle_value"] = singleton_basin_oracle(extract_sign_pattern(params, self.data), self.data)
        return rec


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _exp_prop1(p, trials, seed, workers):
    from ..paths import check_condition2_probability  # paths imports the stats module

    loss = p["loss"]
    widths = [int(w) for w in p["widths"]]
    g = stream(seed, "dataset/prop1")
    X = g.standard_normal((int(p["m"]), int(p["d"])))
    if loss in ("squared", "mse"):
        data, k = Dataset(X, g.standard_normal(int(p["m"]))), 1
    else:
        k = int(p["classes"])
        data = Dataset(X, g.integers(0, k, int(p["m"])), loss="cross_entropy", k=k)
    sizes = [int(p["d"])] + widths + [k]
    rep = check_condition2_probability(sizes, _dist(p), data.loss, data, trials, seed=seed, workers=workers)
    return rep, None


def _exp_thm3(p, trials, seed, workers):
    data = gen_singleton_hardness(SingletonHardnessSpec(int(p["d"]), float(p["eps"])))
    alpha = singleton_unconstrained_value(data)
    fn = _Thm3Trial(data, _dist(p), int(p["n"]), alpha, int(p["solver_crosscheck"]))
    records = run_trials(fn, trials, seed, workers)
    checked = [r for r in records if "solver_event" in r]
    agree = sum(r["solver_event"] == r["event"] for r in checked)
    extra = {"alpha": alpha, "solver_crosschecked": len(checked),
             "solver_agreement": agree / len(checked) if checked else float("nan"),
             "solver_disagreements": [r["trial"] for r in checked if r["solver_event"] != r["event"]]}
    return records, extra


def _exp_thm4(p, trials, seed, workers):
    spec = LowRankSpec(d=int(p["d"]), m=int(p["m"]), rank=int(p["rank"]), n=int(p["teacher_width"]),
                       B=float(p["B"]))
    data, _teacher = gen_lowrank_realizable(spec, seed)
    width = _thm4_width(p)
    records = run_trials(_Thm4Trial(data, _dist(p), width, float(p["eps"])), trials, seed, workers)
    zero = objective("squared", np.zeros((data.m, 1)), data.y)
    extra = {"width": width, "p_eps": p_epsilon(p["eps"], p["teacher_width"], p["B"], p["rank"]),
             "zero_predictor_objective": zero,
             "event_trivial": bool(zero <= p["eps"])}
    return records, extra


def _exp_thm5(p, trials, seed, workers):
    data = gen_fullrank(FullRankSpec(int(p["m"]), int(p["d"])), seed)
    fn = _Thm5Trial(data, _dist(p), int(p["n"]), 0.0, int(p["solver_check"]))
    records = run_trials(fn, trials, seed, workers)
    return records, _certificate_extra(records, "construct_objective", p, "thm5", 1e-8)


def _exp_thm6(p, trials, seed, workers):
    spec = ClusteredSpec(d=int(p["d"]), k=int(p["k"]), counts=p["counts"],
                         radius_fraction=float(p["radius_fraction"]), gamma=float(p["gamma"]),
                         c=float(p["c"]))
    data = gen_clustered(spec, seed)
    records = run_trials(_Thm6Trial(data, _dist(p), int(p["n"]), int(p["solver_check"])), trials, seed, workers)
    extra = _certificate_extra(records, "certificate", p, "thm6", None)
    ok = [r for r in records if r.get("construct") and not r.get("error")]
    extra.update({
        "certificate_bound": records[0].get("bound") if records else None,
        "max_certificate_over_bound": max((r["certificate"] / r["bound"] for r in ok), default=float("nan")),
        "certificates_within_bound": all(r["certificate"] <= r["bound"] for r in ok),
        "trials_with_noisy_neurons": sum(1 for r in records if r.get("noisy_hits")),
        "dataset_constants": {k: data.meta[k] for k in ("B", "c", "delta", "gamma", "sigma_max", "sigma_min")},
    })
    return records, extra


def _certificate_extra(records, key, p, bound_id, cap):
    """Statistics for the certificate-only event next to the disjunctive one."""
    valid = [r for r in records if not r.get("error")]
    s = sum(1 for r in valid if r["construct"])
    lo, hi = clopper_pearson(s, len(valid))
    bound = BOUND_SPECS[bound_id].value(p)
    errors = len(records) - len(valid)
    ok = [r for r in valid if r["construct"]]
    checked = [r for r in ok if "solver_value" in r]
    extra = {
        "construction_successes": s,
        "construction_estimate": s / len(valid) if valid else float("nan"),
        "construction_lower": lo, "construction_upper": hi,
        "construction_verdict": decide_verdict(lo, hi, bound, "lower", errors, len(records)),
        "max_construction_objective": max((r[key] for r in ok), default=float("nan")),
        "solver_crosschecked": len(checked),
        "solver_not_above_certificate": all(r["solver_value"] <= r[key] + SOLVER_SLACK for r in checked),
        "max_solver_value_on_success": max((r["solver_value"] for r in checked), default=float("nan")),
    }
    if cap is not None:
        extra["construction_objectives_within_cap"] = all(r[key] <= cap for r in ok)
    return extra


def _exp_thm7(p, trials, seed, workers):
    census = appc_local_minima_census(int(p["d"]), float(p["eps"]), trials=0)
    data = gen_singleton_hardness(SingletonHardnessSpec(int(p["d"]), float(p["eps"])))
    fn = _Thm7Trial(data, _dist(p), census.good_value, census.bad_value, 0.125, int(p["oracle_crosscheck"]))
    records = run_trials(fn, trials, seed, workers)
    checked = [r for r in records if "oracle_value" in r]
    extra = {"threshold": 0.125, "exact_probability": census.exact_probability,
             "oracle_crosschecked": len(checked),
             "max_oracle_discrepancy": max((abs(r["oracle_value"] - r["value"]) for r in checked), default=0.0),
             "bad_count_binomial_pvalue": _binomial_gof([r["bad_coordinates"] for r in records
                                                         if not r.get("error")], int(p["d"]))}
    return records, extra


def _binomial_gof(ks, d) -> float:
    """Chi-square p-value of the bad-coordinate counts against Binomial(d, 1/2), pooling thin tails."""
    if not ks:
        return float("nan")
    counts = np.bincount(ks, minlength=d + 1).astype(float)
    expected = stats.binom.pmf(np.arange(d + 1), d, 0.5) * len(ks)
    obs, exp, acc_o, acc_e = [], [], 0.0, 0.0
    for o, e in zip(counts, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            obs.append(acc_o)
            exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and exp:
        obs[-1] += acc_o
        exp[-1] += acc_e
    if len(obs) < 2:
        return 1.0
    exp = np.asarray(exp) * (sum(obs) / sum(exp))
    return float(stats.chisquare(obs, exp).pvalue)


_RUNNERS = {"prop1": _exp_prop1, "thm3": _exp_thm3, "thm4": _exp_thm4, "thm5": _exp_thm5,
            "thm6": _exp_thm6, "thm7": _exp_thm7}


def run_bound_experiment(bound_id: str, params: dict | None = None, trials: int | None = None,
                         seed: int = 0, workers: int = 1) -> MCReport:
    """Estimate the event probability of ``bound_id`` and compare with its bound."""
    p = _merge(bound_id, params)
    trials = DEFAULT_TRIALS[bound_id] if trials is None else int(trials)
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}, got {trials}")
    if bound_id == "cap":
        return cap_bound_check(int(p["d"]), float(p["delta"]), trials, seed, dist=_dist(p))
    if bound_id == "noisy":
        delta = float(p["radius_fraction"]) * cluster_radius_bound(int(p["d"])) * float(p["center_norm"])
        center = np.zeros(int(p["d"]))
        center[0] = float(p["center_norm"])
        return noisy_region_check(int(p["d"]), center, delta, trials, seed, dist=_dist(p))
    spec = BOUND_SPECS[bound_id]
    out, extra = _RUNNERS[bound_id](p, trials, seed, workers)
    if isinstance(out, MCReport):
        out.params = {**p, **out.params}
        out.bound_id = bound_id
        return out
    return summarize(bound_id, out, spec.value(p), spec.direction, seed, params=p,
                     extra={"theorem": spec.theorem, "event": spec.event, **(extra or {})},
                     diag_sample=len(out))


# ---------------------------------------------------------------------------
# Vectorized sphere checks
# ---------------------------------------------------------------------------

_CHUNK = 100_000


def _unit_vectors(dist: InitDistribution, count: int, d: int, g) -> np.ndarray:
    W = sample_vectors(dist, count, d, g)
    return W / np.linalg.norm(W, axis=1, keepdims=True)


def cap_bound_check(d: int, delta: float, trials: int, seed: int = 0,
                    dist: InitDistribution | None = None) -> MCReport:
    """Frequency of ``||a - e_1|| <= delta`` for uniform ``a`` on the sphere vs. the cap bound."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if not 0 < delta <= 2:
        raise ValueError(f"delta must lie in (0, 2], got {delta}")
    dist = dist or InitDistribution()
    g = stream(seed, f"init/cap/d{d}/delta{delta!r}")
    hits, done = 0, 0
    while done < trials:
        cnt = min(_CHUNK, trials - done)
        a = _unit_vectors(dist, cnt, d, g)
        # ||a - e1||^2 = 2 - 2 a_1
        hits += int(np.sum(2 - 2 * a[:, 0] <= delta * delta))
        done += cnt
    records = [{"event": True}] * hits + [{"event": False}] * (trials - hits)
    bound = cap_lower_bound(d, delta)
    extra = {"theorem": "Claim 1", "event": BOUND_SPECS["cap"].event}
    if d == 3:
        exact = cap_exact_d3(delta)
        extra.update({"exact": exact, "abs_error_vs_exact": abs(hits / trials - exact),
                      "exact_ge_bound": bool(exact >= bound)})
    return summarize("cap", records, bound, "lower", seed, params={"d": d, "delta": delta},
                     extra=extra, diag_sample=0)


def noisy_region_check(d: int, center, delta: float, trials: int, seed: int = 0,
                       dist: InitDistribution | None = None) -> MCReport:
    """Frequency of uniform unit ``w`` with ``|<w, c>| > delta`` vs. ``1 - 1/(4d)``.

    For unit ``w``, ``min_{||y - c|| <= delta} |<w, y>| = max(0, |<w, c>| - delta)``,
    so this is exactly the event that the hyperplane of ``w`` misses the ball.
    """
    c = np.asarray(center, float)
    if c.shape != (d,):
        raise ValueError(f"center must have length {d}")
    cn = float(np.linalg.norm(c))
    if delta < 0 or cn == 0:
        raise ValueError("need delta >= 0 and a nonzero center")
    bound_ratio = cluster_radius_bound(d)
    if delta / cn > bound_ratio * (1 + 1e-12):
        raise ValueError(f"delta/||c|| = {delta / cn:.6g} exceeds the allowed radius ratio {bound_ratio:.6g}")
    dist = dist or InitDistribution()
    g = stream(seed, f"init/noisy/d{d}")
    hits, done, antipodal_ok = 0, 0, True
    while done < trials:
        cnt = min(_CHUNK, trials - done)
        w = _unit_vectors(dist, cnt, d, g)
        ev = np.abs(w @ c) > delta
        antipodal_ok &= bool(np.array_equal(ev, np.abs(-w @ c) > delta))
        hits += int(ev.sum())
        done += cnt
    records = [{"event": True}] * hits + [{"event": False}] * (trials - hits)
    return summarize("noisy", records, 1 - 1 / (4 * d), "lower", seed,
                     params={"d": d, "center_norm": cn, "delta": delta},
                     extra={"theorem": "Lemma 7", "event": BOUND_SPECS["noisy"].event,
                            "antipodal_agreement": antipodal_ok, "radius_ratio": delta / cn},
                     diag_sample=0)


# ---------------------------------------------------------------------------
# Single-neuron census
# ---------------------------------------------------------------------------


@dataclass
class Census:
    d: int
    eps: float
    good_value: float
    bad_value: float
    values: np.ndarray  # indexed by bitmask of bad coordinates
    bad_counts: np.ndarray
    threshold: float
    exact_probability: float
    chernoff_bound: float
    oracle_checked: int
    report: MCReport | None = None

    @property
    def count(self) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        return {"d": self.d, "eps": self.eps, "minima": self.count, "good_value": self.good_value,
                "bad_value": self.bad_value, "threshold": self.threshold,
                "exact_probability": self.exact_probability, "chernoff_bound": self.chernoff_bound,
                "distinct_values": sorted(set(np.round(self.values, 15).tolist())),
                "oracle_checked": self.oracle_checked,
                "report": self.report.to_dict() if self.report else None}


def appc_local_minima_census(d: int, eps: float, trials: int = 10_000, seed: int = 0,
                             oracle_checks: int = 64, workers: int = 1) -> Census:
    """Enumerate the ``2^d`` single-neuron minima of the hardness set.

    Combination ``mask`` (bit ``j`` set = coordinate ``j`` in its bad basin)
    has value ``(k/2 + (d - k) eps) / d`` for ``k`` bad coordinates.  The
    one-dimensional good/bad values come from the exact oracle, a sample of
    combinations is re-evaluated on the full ``d``-dimensional set, and the
    probability of ``Bas <= 1/8`` is summed exactly.  ``trials > 0`` adds a
    Monte Carlo check against ``e^{-d/16}``.
    """
    if not 1 <= d <= 20:
        raise ValueError(f"exact enumeration supports 1 <= d <= 20, got d={d}")
    one = gen_singleton_hardness(SingletonHardnessSpec(1, eps))
    good = singleton_basin_oracle(extract_sign_pattern(TwoLayerParams(np.array([[-1.0]]), np.ones(1)), one), one)
    bad = singleton_basin_oracle(extract_sign_pattern(TwoLayerParams(np.array([[1.0]]), np.ones(1)), one), one)
    masks = np.arange(2 ** d, dtype=np.int64)
    k = np.zeros(len(masks), dtype=np.int64)
    for j in range(d):
        k += (masks >> j) & 1
    values = (k * bad + (d - k) * good) / d
    # exact rational threshold test, so that boundary combinations are not lost to rounding
    e = Fraction(repr(float(eps)))
    hits = [kk for kk in range(d + 1) if (Fraction(kk, 2) + (d - kk) * e) / d <= Fraction(1, 8)]
    prob = float(sum(Fraction(math.comb(d, kk), 2 ** d) for kk in hits))
    full = gen_singleton_hardness(SingletonHardnessSpec(d, eps))
    g = stream(seed, "census/oracle")
    sample = masks if len(masks) <= oracle_checks else g.choice(masks, oracle_checks, replace=False)
    for mask in sample:
        w = np.array([1.0 if (int(mask) >> j) & 1 else -1.0 for j in range(d)])
        val = singleton_basin_oracle(extract_sign_pattern(TwoLayerParams(w[None, :], np.ones(1)), full), full)
        if abs(val - values[int(mask)]) > 1e-12:
            raise AssertionError(f"combination {int(mask)}: oracle {val} vs census {values[int(mask)]}")
    census = Census(d, eps, good, bad, values, k, 0.125, prob, math.exp(-d / 16), len(sample))
    if trials:
        census.report = run_bound_experiment("thm7", {"d": d, "eps": eps}, trials, seed, workers)
    return census
