import math

import numpy as np
import pytest

from relubasin.datasets import (ClusteredSpec, DatasetValidationError, FullRankSpec, LowRankSpec,
                                SingletonHardnessSpec, cluster_radius_bound, gen_clustered,
                                gen_fullrank, gen_lowrank_realizable, gen_singleton_hardness,
                                generate, p_epsilon, spec_from_dict, validate_clustered)
from relubasin.nets import TwoLayerParams, objective_params


def test_singleton_hardness_one_dim():
    data = gen_singleton_hardness(SingletonHardnessSpec(1, 0.1))
    assert data.m == 2
    assert objective_params(TwoLayerParams([[-1.0]], [1.0]), data) == pytest.approx(0.1, abs=1e-15)
    assert objective_params(TwoLayerParams([[2 * math.sqrt(0.2)]], [1.0]), data) == pytest.approx(0.5, abs=1e-15)


def test_singleton_hardness_two_dim_minima():
    eps = 0.1
    data = gen_singleton_hardness(SingletonHardnessSpec(2, eps))
    good, bad = -1.0, 2 * math.sqrt(2 * eps)
    vals = sorted(objective_params(TwoLayerParams([[a, b]], [1.0]), data)
                  for a in (good, bad) for b in (good, bad))
    expected = sorted([eps, (eps + 0.5) / 2, (eps + 0.5) / 2, 0.5])
    np.testing.assert_allclose(vals, expected, atol=1e-15)
    assert np.all(np.count_nonzero(data.X, axis=1) == 1)


def test_singleton_hardness_rejects_eps():
    for eps in (0.0, 0.25, 1.0):
        with pytest.raises(DatasetValidationError):
            gen_singleton_hardness(SingletonHardnessSpec(2, eps))


def test_fullrank():
    data = gen_fullrank(FullRankSpec(1, 1), seed=2)
    assert data.X[0, 0] != 0
    data = gen_fullrank(FullRankSpec(5, 8), seed=2)
    assert data.meta["rank"] == 5
    G = data.X @ data.X.T
    a = np.linalg.solve(G, np.eye(5)[0])
    assert np.max(np.abs(G @ a - np.eye(5)[0])) <= 1e-8
    with pytest.raises(DatasetValidationError):
        gen_fullrank(FullRankSpec(6, 3))


def test_clustered_radius_bound_value():
    # independent evaluation of 2 sin(sqrt(2 pi) / (16 d sqrt d)) at d = 10
    inner = math.sqrt(2 * math.pi) / (16 * 10 * math.sqrt(10))
    assert inner == pytest.approx(4.9541591e-3, rel=1e-7)
    assert cluster_radius_bound(10) == pytest.approx(9.908277712945227e-3, rel=1e-12)


def test_clustered_degenerate_and_lipschitz():
    data = gen_clustered(ClusteredSpec(d=3, k=1, counts=5, radii=[0.0], centers=[[1.0, 2.0, 0.5]]), seed=1)
    assert np.all(data.X == data.X[0])
    assert np.ptp(data.y) == 0
    big = gen_clustered(ClusteredSpec(), seed=4)
    ids = big.cluster_ids
    for j in range(1, 4):
        idx = np.flatnonzero(ids == j)
        dx = np.linalg.norm(big.X[idx, None] - big.X[None, idx], axis=2)
        dy = np.abs(big.y[idx, None] - big.y[None, idx])
        assert np.all(dy <= big.meta["gamma"] * dx + 1e-12)
    validate_clustered(big)


def test_clustered_rejects_large_radius():
    with pytest.raises(DatasetValidationError, match="exceeds the bound"):
        gen_clustered(ClusteredSpec(d=10, k=2, radius_fraction=1.5))


def test_lowrank():
    for r in (1, 2, 3):
        data, teacher = gen_lowrank_realizable(LowRankSpec(d=5, m=12, rank=r, n=2, B=1.0), seed=r)
        s = np.linalg.svd(data.X, compute_uv=False)
        assert int(np.sum(s > 1e-8 * s[0])) == r
        assert objective_params(teacher, data) <= 1e-12
        assert np.all(np.linalg.norm(data.X, axis=1) <= 1 + 1e-12)
        np.testing.assert_allclose(np.abs(teacher.v) * np.linalg.norm(teacher.W, axis=1), 1.0)
    data, _ = gen_lowrank_realizable(LowRankSpec(rank=1), seed=0)
    u = data.X[0]
    assert np.allclose(np.abs(data.X @ u), 1.0)


def test_p_epsilon():
    expected = (1 / (2 * math.pi)) * 0.5 * math.sqrt(1 - 0.0625)
    assert p_epsilon(0.25, 1, 1.0, 2) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.0770506, abs=1e-7)
    assert 2 * math.ceil(1 / expected) == 26
    assert p_epsilon(1e-300, 1, 1.0, 3) < 1e-290
    # increasing while sqrt(eps)/(nB) <= sqrt(2), i.e. eps <= 2 n^2 B^2
    grid = [p_epsilon(e, 1, 1.0, 3) for e in np.linspace(0.01, 2.0, 50)]
    assert all(b > a for a, b in zip(grid, grid[1:]))
    with pytest.raises(ValueError):
        p_epsilon(0.1, 1, 1.0, 1)


def test_generate_dispatch():
    data, teacher, _ = generate("lowrank", {"rank": 2}, seed=3)
    assert teacher is not None and data.meta["rank"] == 2
    with pytest.raises(ValueError, match="unknown"):
        spec_from_dict("clustered", {"radius": 1})
    with pytest.raises(ValueError):
        generate("spiral", {}, 0)
