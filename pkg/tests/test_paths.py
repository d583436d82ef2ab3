import math

import numpy as np
import pytest

from relubasin.init import InitDistribution, sample_deep, sample_two_layer
from relubasin.nets import (Dataset, DeepParams, TwoLayerParams, get_loss, objective,
                            objective_at_scale, objective_params, prediction_matrix, scale_output)
from relubasin.paths import (NOT_FOUND, ConditionError, PathError, PathSpec, build_monotone_path,
                             check_condition2_probability, condition1_margin, prop1_bound,
                             rescale_root_find, v_schedule)

SQ = get_loss("squared")
CE = get_loss("cross_entropy")


def test_v_schedule():
    assert v_schedule(0.0, 4.0, 1.0, 0.0) == 4.0
    assert v_schedule(1.0, 4.0, 1.0, 0.0) == pytest.approx(3.0, abs=1e-15)
    vals = [v_schedule(l, 4.0, 1.0, 0.5) for l in np.linspace(0, 1, 101)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_condition1_margin():
    assert condition1_margin(SQ, np.array([[1.0]]), np.array([0.0]), 0.5, 0.1) == 1.0
    assert condition1_margin(SQ, np.zeros((2, 1)), np.array([1.0, 2.0]), 5.0, 0.1) is NOT_FOUND
    assert not NOT_FOUND
    # wrong class has the larger logit: scaling up drives the loss to infinity
    c = condition1_margin(CE, np.array([[2.0, 0.0]]), np.array([1]), 2.2, 0.5)
    assert c is not NOT_FOUND and math.isfinite(c)
    assert objective_at_scale(CE, np.array([[2.0, 0.0]]), np.array([1]), c) >= 2.7


def test_rescale_root_find():
    P, y = np.array([[1.0]]), np.array([2.0])
    assert rescale_root_find(SQ, P, y, 1.0, 10.0) == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(PathError):
        rescale_root_find(SQ, P, y, 1.0, 2.5)


def test_rescale_root_reproduces_unit_scale(rng):
    X = rng.standard_normal((5, 2))
    data = Dataset(X, rng.standard_normal(5))
    p = TwoLayerParams(3 * rng.standard_normal((4, 2)), 3 * rng.standard_normal(4))
    P = prediction_matrix(p, data)
    L = objective(SQ, P, data.y)
    c_hi = condition1_margin(SQ, P, data.y, L, 0.1)
    if objective(SQ, np.zeros_like(P), data.y) < L:
        # unit scale sits on the increasing branch here
        assert rescale_root_find(SQ, P, data.y, L, max(c_hi, 2.0)) == pytest.approx(1.0, abs=1e-10)


def test_rescale_residual(rng):
    for _ in range(10):
        P = rng.standard_normal((6, 1))
        y = rng.standard_normal(6)
        lo, hi = objective(SQ, 0 * P, y), objective(SQ, 4 * P, y)
        if hi <= lo:
            continue
        v = lo + 0.5 * (hi - lo)
        c = rescale_root_find(SQ, P, y, v, 4.0)
        assert abs(objective_at_scale(SQ, P, y, c) - v) <= 1e-10


def test_single_point_closed_form():
    data = Dataset([[1.0]], [1.0])
    A = TwoLayerParams([[1.0]], [3.0])
    B = TwoLayerParams([[1.0]], [1.2])
    res = build_monotone_path(PathSpec(A, B, N=50, eps=0.1), SQ, data)
    assert res.monotone
    for lam, c, v in zip(res.lams, res.c_tilde, res.targets):
        p = 3.0 - 1.8 * lam
        assert c == pytest.approx((1.0 + math.sqrt(v)) / p, abs=1e-8)


def test_path_to_global_minimum(rng):
    X = rng.standard_normal((4, 3))
    teacher = TwoLayerParams(rng.standard_normal((2, 3)), rng.standard_normal(2))
    data = Dataset(X, prediction_matrix(teacher, Dataset(X, np.zeros(4)))[:, 0])
    start = TwoLayerParams(4 * teacher.W, 4 * teacher.v)
    res = build_monotone_path(PathSpec(start, teacher, N=200), SQ, data)
    assert res.monotone and res.violations == 0
    assert res.final_objectives[-1] == 0.0
    assert res.c_tilde[0] == 1.0


def test_deep_cross_entropy_path(rng):
    d, k = 3, 3
    data = Dataset(rng.standard_normal((6, d)), rng.integers(0, k, 6), loss="cross_entropy", k=k)
    dist = InitDistribution()
    for s in range(10):
        A = sample_deep(dist, [d, 4, 5, k], s)
        A = scale_output(A, 4.0)
        B = sample_deep(dist, [d, 4, 5, k], 100 + s)
        L0, L1, Lz = (objective_params(A, data, CE), objective_params(B, data, CE),
                      objective(CE, np.zeros((6, k)), data.y))
        if L1 < L0 and L0 > Lz:
            break
    res = build_monotone_path(PathSpec(A, B, N=1000), CE, data)
    assert res.monotone
    assert abs(res.c_tilde[0] - 1.0) <= 1e-10


def test_condition_errors(rng):
    data = Dataset([[1.0]], [1.0])
    tiny = TwoLayerParams([[1.0]], [1e-9])
    with pytest.raises(ConditionError) as info:
        build_monotone_path(PathSpec(tiny, TwoLayerParams([[1.0]], [1.0])), SQ, data)
    assert info.value.condition == 2
    with pytest.raises(PathError):
        build_monotone_path(PathSpec(TwoLayerParams([[1.0]], [1.0]), TwoLayerParams([[1.0]], [3.0])), SQ, data)


def test_prop1_bound_and_probability():
    assert prop1_bound(1) == 0.25
    assert prop1_bound(6) == pytest.approx(0.4921875, abs=1e-15)
    assert prop1_bound(3) == 0.4375
    g = np.random.default_rng(0)
    data = Dataset(g.standard_normal((10, 5)), g.standard_normal(10))
    rep = check_condition2_probability([5, 4, 6, 3, 1], InitDistribution(), SQ, data, 2000, seed=1)
    assert rep.verdict == "CONSISTENT"
    assert rep.bound == 0.4375
