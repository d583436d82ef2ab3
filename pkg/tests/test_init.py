import numpy as np
import pytest

from relubasin.init import (InitDistribution, rotation_invariance_pvalue, sample_deep,
                            sample_two_layer, sample_vectors, sign_uniformity_pvalue)
from relubasin.rng import stream


def test_two_layer_deterministic():
    dist = InitDistribution("gaussian", 1.0, seed=5)
    a, b = sample_two_layer(dist, 4, 3, 7), sample_two_layer(dist, 4, 3, 7)
    assert np.array_equal(a.W, b.W) and np.array_equal(a.v, b.v)
    c = sample_two_layer(dist, 4, 3, 8)
    assert not np.array_equal(a.W, c.W)


def test_sphere_rows_unit_norm():
    p = sample_two_layer(InitDistribution("sphere", 1.0), 50, 6, 0)
    np.testing.assert_allclose(np.linalg.norm(p.W, axis=1), 1.0, atol=1e-12)
    assert np.allclose(np.abs(p.v), 1.0)


def test_gaussian_sign_frequency():
    W = sample_vectors(InitDistribution(), 10_000, 10, stream(1, "test/signs"))
    assert abs(np.mean(W > 0) - 0.5) <= 0.01


def test_sample_deep_shapes_and_determinism():
    dist = InitDistribution(seed=3)
    net = sample_deep(dist, [2, 3, 1], 0)
    assert net.hidden[0][0].shape == (3, 2)
    assert net.hidden[0][1].shape == (3,)
    assert net.output.shape == (1, 3)
    again = sample_deep(dist, [2, 3, 1], 0)
    assert np.array_equal(net.output, again.output)


def test_deep_sign_uniformity():
    g = stream(2, "test/deep-signs")
    wb = np.array([np.concatenate([sample_deep(InitDistribution(), [3, 1, 1], g).hidden[0][0][0],
                                   sample_deep(InitDistribution(), [3, 1, 1], g).hidden[0][1]])
                   for _ in range(2000)])
    assert sign_uniformity_pvalue(wb) > 0.001
    vecs = sample_vectors(InitDistribution(), 10_000, 4, stream(2, "test/cube"))
    assert sign_uniformity_pvalue(vecs) > 0.001


def test_rotation_invariance():
    vecs = sample_vectors(InitDistribution("sphere", 2.0), 20_000, 5, stream(4, "test/rot"))
    u = np.array([1.0, 0, 0, 0, 0])
    u2 = np.array([0.3, -0.2, 0.5, 0.1, 0.7])
    assert rotation_invariance_pvalue(vecs, u, u2) > 0.001


def test_bad_distribution():
    with pytest.raises(ValueError):
        InitDistribution("laplace")
    with pytest.raises(ValueError):
        InitDistribution("sphere", 0.0)
    assert InitDistribution.from_dict({"kind": "sphere", "radius": 2.0}).scale == 2.0
