import json
import math

import numpy as np
import pytest

from relubasin.basins import extract_sign_pattern, solve_basin_value
from relubasin.datasets import ClusteredSpec, FullRankSpec, gen_clustered, gen_fullrank
from relubasin.init import InitDistribution, sample_two_layer
from relubasin.montecarlo import (BOUND_SPECS, appc_local_minima_census, cap_bound_check, cap_exact_d3,
                                  clopper_pearson, clustered_bound, clustered_construct, decide_verdict,
                                  fullrank_construct, noisy_region_check, run_bound_experiment,
                                  run_trials, summarize)
from relubasin.montecarlo.experiments import cap_lower_bound
from relubasin.nets import Dataset, TwoLayerParams


def test_clopper_pearson_edges():
    # closed forms at s = 0 and s = n: (1 - hi)^n = alpha and lo^n = alpha
    lo, hi = clopper_pearson(0, 100)
    assert lo == 0.0 and hi == pytest.approx(1 - 0.001 ** (1 / 100), rel=1e-12)
    lo, hi = clopper_pearson(100, 100)
    assert hi == 1.0 and lo == pytest.approx(0.001 ** (1 / 100), rel=1e-12)
    lo, hi = clopper_pearson(50, 100)
    assert lo < 0.5 < hi


def test_verdicts():
    assert decide_verdict(0.90, 0.95, 0.96, "lower", 0, 100) == "REFUTED"
    assert decide_verdict(0.90, 0.97, 0.96, "lower", 0, 100) == "CONSISTENT"
    assert decide_verdict(0.40, 0.50, 0.37, "upper", 0, 100) == "REFUTED"
    assert decide_verdict(0.30, 0.50, 0.37, "upper", 0, 100) == "CONSISTENT"
    assert decide_verdict(0.90, 0.97, 0.96, "lower", 2, 1000) == "INCONCLUSIVE"
    assert decide_verdict(0.90, 0.97, 0.96, "lower", 1, 1000) == "CONSISTENT"


def _flaky(index, rng):
    if index == 3:
        raise RuntimeError("boom")
    return {"event": bool(rng.random() < 0.5), "u": float(rng.random())}


def test_run_trials_errors_and_workers():
    a = run_trials(_flaky, 40, seed=9)
    b = run_trials(_flaky, 40, seed=9, workers=2)
    assert a == b
    assert a[3]["error"].startswith("RuntimeError")
    rep = summarize("x", a, 0.1, "lower", 9)
    assert rep.errors == 1 and rep.trials == 40 and rep.verdict == "INCONCLUSIVE"
    json.loads(rep.to_json())


def test_fullrank_construct_examples(rng):
    data = Dataset([[1.0, 0.0]], [3.0])
    res = fullrank_construct(TwoLayerParams([[1.0, 0.0]], [1.0]), data)
    assert res.success and res.params.W.tolist() == [[3.0, 0.0]]
    assert res.objective == 0.0
    miss = fullrank_construct(TwoLayerParams([[-1.0, 0.0]], [1.0]), data)
    assert not miss.success and miss.unclaimed == [0]
    data = gen_fullrank(FullRankSpec(3, 5), seed=11)
    dist = InitDistribution()
    done = 0
    for s in range(40):
        p = sample_two_layer(dist, 12, 5, s)
        res = fullrank_construct(p, data)
        if res.success:
            done += 1
            assert res.objective <= 1e-8 and res.sign_compatible
            assert solve_basin_value(extract_sign_pattern(p, data), data).value <= res.objective + 1e-6
    assert done > 30


def test_fullrank_requires_rank():
    data = Dataset([[1.0, 0.0], [2.0, 0.0]], [1.0, 1.0])
    with pytest.raises(np.linalg.LinAlgError):
        fullrank_construct(TwoLayerParams([[1.0, 0.0]], [1.0]), data)


def test_clustered_zero_radius_matches_fullrank():
    C = np.array([[1.0, 0.2, 0.0], [0.0, 1.5, 0.3]])
    data = gen_clustered(ClusteredSpec(d=3, k=2, counts=3, radii=[0.0, 0.0], centers=C.tolist(),
                                       y_hat=[0.7, -1.1]), seed=0)
    p = sample_two_layer(InitDistribution(), 10, 3, 4)
    res = clustered_construct(p, data)
    centers = Dataset(C, [0.7, -1.1])
    ref = fullrank_construct(p, centers)
    assert res.success == ref.success
    if res.success:
        assert res.objective <= 1e-10


def test_clustered_noisy_hit_strict():
    data = gen_clustered(ClusteredSpec(d=3, k=1, counts=4, centers=[[1.0, 0.0, 0.0]], radius_fraction=0.5), seed=1)
    delta = data.meta["radii"][0]
    w = np.array([[delta / 2, 1.0, 0.0], [1.0, 0.0, 0.0]])
    p = TwoLayerParams(w, np.sign([1.0, data.meta["y_hat"][0]]))
    strict = clustered_construct(p, data, strict=True)
    assert not strict.success and strict.noisy == [(0, 0)]
    assert "neuron 0" in strict.message
    relaxed = clustered_construct(p, data)
    assert relaxed.success and relaxed.noisy == [(0, 0)]


def test_clustered_certificate_and_solver():
    data = gen_clustered(ClusteredSpec(d=10, k=3, counts=6), seed=2)
    p = sample_two_layer(InitDistribution(), 40, 10, 0)
    res = clustered_construct(p, data)
    assert res.success
    assert res.objective <= res.bound == clustered_bound(data, 40)
    assert solve_basin_value(extract_sign_pattern(p, data), data).value <= res.objective + 1e-6


def test_cap_bound_values():
    assert cap_exact_d3(0.5) == pytest.approx(0.0625, abs=1e-15)
    assert cap_lower_bound(3, 0.5) == pytest.approx(0.25 * 0.9375 / (2 * math.pi), rel=1e-14)
    assert cap_lower_bound(3, 0.5) == pytest.approx(0.0373, abs=5e-5)
    rep = cap_bound_check(5, 2.0, 1000, seed=1)
    assert rep.successes == 1000
    rep = cap_bound_check(3, 0.5, 200_000, seed=2)
    assert rep.verdict == "CONSISTENT"
    assert abs(rep.estimate - 0.0625) <= 0.002


def test_noisy_region_check():
    c = np.zeros(10)
    c[0] = 1.0
    rep = noisy_region_check(10, c, 0.0, 5000, seed=1)
    assert rep.successes == 5000
    rep = noisy_region_check(10, c, 0.0099, 50_000, seed=1)
    assert rep.extra["antipodal_agreement"] is True
    assert rep.verdict == "CONSISTENT"
    with pytest.raises(ValueError):
        noisy_region_check(10, c, 0.5, 100)


def test_census_small_dimensions():
    c1 = appc_local_minima_census(1, 0.1, trials=0)
    np.testing.assert_allclose(sorted(c1.values), [0.1, 0.5], atol=1e-15)
    c2 = appc_local_minima_census(2, 0.1, trials=0)
    np.testing.assert_allclose(sorted(c2.values), sorted([0.1, 0.3, 0.3, 0.5]), atol=1e-15)
    c16 = appc_local_minima_census(16, 0.1, trials=0)
    assert c16.count == 2 ** 16
    # k <= 1 bad coordinates meet the 1/8 threshold exactly: (1 + 16) / 2^16
    assert c16.exact_probability == 17 / 65536
    assert c16.exact_probability <= math.exp(-1)
    with pytest.raises(ValueError):
        appc_local_minima_census(21, 0.1)


def test_run_bound_experiment_guards():
    with pytest.raises(ValueError):
        run_bound_experiment("thm3", trials=50)
    with pytest.raises(ValueError):
        run_bound_experiment("thm3", {"width": 3}, trials=100)
    with pytest.raises(ValueError):
        run_bound_experiment("thm99", trials=100)


def test_bound_formulas():
    assert BOUND_SPECS["thm3"].value({"d": 5, "n": 20}) == pytest.approx(1 - 10 * 0.75 ** 20, rel=1e-15)
    assert BOUND_SPECS["thm3"].value({"d": 5, "n": 20}) == pytest.approx(0.9683, abs=5e-5)
    assert BOUND_SPECS["thm5"].value({"m": 5, "n": 15}) == pytest.approx(1 - 5 * 0.75 ** 15, rel=1e-15)
    assert BOUND_SPECS["thm6"].value({"d": 10, "n": 40}) == pytest.approx(0.952, abs=5e-4)
    assert BOUND_SPECS["thm4"].value({"c": 2, "teacher_width": 1}) == pytest.approx(0.3935, abs=5e-5)
    assert BOUND_SPECS["thm7"].value({"d": 16}) == pytest.approx(math.exp(-1), rel=1e-15)
    assert BOUND_SPECS["prop1"].value({"widths": [4, 6, 3]}) == 0.4375
    assert BOUND_SPECS["thm3"].value({"d": 5, "n": 1}) == 0.0


def test_experiment_count_identical_across_workers():
    a = run_bound_experiment("thm5", {"n": 8}, trials=100, seed=4, workers=1)
    b = run_bound_experiment("thm5", {"n": 8}, trials=100, seed=4, workers=2)
    assert a.to_json() == b.to_json()
