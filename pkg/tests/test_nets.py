import math

import numpy as np
import pytest

from relubasin.nets import (Dataset, DeepParams, ShapeError, TwoLayerParams, forward_deep,
                            forward_two_layer, get_loss, objective, objective_at_scale,
                            objective_params, prediction_matrix, two_layer_gradient)


def loop_two_layer(W, v, x):
    total = 0.0
    for i in range(len(v)):
        pre = sum(W[i][j] * x[j] for j in range(len(x)))
        total += v[i] * max(pre, 0.0)
    return total


def loop_deep(params, x):
    h = list(x)
    for W, b in params.hidden:
        h = [max(sum(W[i][j] * h[j] for j in range(len(h))) + b[i], 0.0) for i in range(len(b))]
    out = params.output
    return [sum(out[r][j] * h[j] for j in range(len(h))) for r in range(out.shape[0])]


def test_forward_two_layer_examples():
    assert forward_two_layer(TwoLayerParams([[1, 0]], [1]), [0.5, -3]) == 0.5
    assert forward_two_layer(TwoLayerParams([[-1, 0]], [2]), [0.5, -3]) == 0.0
    p = TwoLayerParams([[1, 1], [-1, 2]], [1, -1])
    assert forward_two_layer(p, [2, 1]) == 3.0
    assert loop_two_layer(p.W, p.v, [2, 1]) == 3.0


def test_forward_two_layer_matches_loop(rng):
    W, v = rng.standard_normal((7, 4)), rng.standard_normal(7)
    for _ in range(20):
        x = rng.standard_normal(4)
        assert forward_two_layer(TwoLayerParams(W, v), x) == pytest.approx(loop_two_layer(W, v, x), abs=1e-12)


def test_forward_deep_identity():
    net = DeepParams((([[1.0]], [0.0]),), [[1.0]])
    assert forward_deep(net, [2.0]).tolist() == [2.0]
    assert forward_deep(net, [-2.0]).tolist() == [0.0]


def test_forward_deep_matches_loop(rng):
    net = DeepParams(((rng.standard_normal((5, 3)), rng.standard_normal(5)),
                      (rng.standard_normal((4, 5)), rng.standard_normal(4))), rng.standard_normal((2, 4)))
    X = rng.standard_normal((5, 3))
    for x in X:
        np.testing.assert_allclose(forward_deep(net, x), loop_deep(net, x), atol=1e-12)
    data = Dataset(X, rng.standard_normal((5, 2)))
    P = prediction_matrix(net, data)
    for t in range(5):
        assert np.array_equal(P[t], forward_deep(net, X[t]))


def test_prediction_matrix_two_layer():
    data = Dataset([[0.5, 0], [-1, 0]], [1.0, 2.0])
    P = prediction_matrix(TwoLayerParams([[1, 0]], [1]), data)
    assert P.shape == (2, 1)
    assert P.tolist() == [[0.5], [0.0]]


def test_empty_dataset_rejected():
    with pytest.raises(ShapeError):
        Dataset(np.zeros((0, 2)), np.zeros(0))


def test_objective_examples():
    eps = 0.1
    sq = get_loss("squared")
    y = np.array([math.sqrt(2 * eps), 1.0])
    assert objective(sq, np.zeros((2, 1)), y) == pytest.approx(0.6, abs=1e-15)
    assert objective(sq, y[:, None], y) == 0.0
    ce = get_loss("cross_entropy")
    assert objective(ce, np.zeros((1, 3)), np.array([2])) == pytest.approx(math.log(3), abs=1e-15)


def test_objective_at_scale():
    sq = get_loss("squared")
    P, y = np.array([[1.0]]), np.array([3.0])
    assert objective_at_scale(sq, P, y, 2.0) == 1.0
    assert objective_at_scale(sq, P, y, 0.0) == objective(sq, np.zeros((1, 1)), y)
    assert objective_at_scale(sq, P, y, 1.0) == objective(sq, P, y)


def test_loss_names():
    assert get_loss("mse").name == "squared"
    assert get_loss("CE").name == "cross_entropy"
    with pytest.raises(ValueError):
        get_loss("hinge")


def test_cross_entropy_label_validation():
    with pytest.raises(ValueError):
        Dataset([[1.0]], [0.5], loss="cross_entropy")
    with pytest.raises(ValueError):
        Dataset([[1.0], [2.0]], [0, 3], loss="cross_entropy", k=2)


def test_two_layer_gradient_finite_difference(rng):
    data = Dataset(rng.standard_normal((6, 3)), rng.standard_normal(6))
    p = TwoLayerParams(rng.standard_normal((4, 3)), rng.standard_normal(4))
    gW, gv = two_layer_gradient(p, data)
    h = 1e-6
    for i in range(4):
        for j in range(3):
            Wp, Wm = p.W.copy(), p.W.copy()
            Wp[i, j] += h
            Wm[i, j] -= h
            fd = (objective_params(TwoLayerParams(Wp, p.v), data) - objective_params(TwoLayerParams(Wm, p.v), data)) / (2 * h)
            assert gW[i, j] == pytest.approx(fd, abs=1e-6)
    for i in range(4):
        vp, vm = p.v.copy(), p.v.copy()
        vp[i] += h
        vm[i] -= h
        fd = (objective_params(TwoLayerParams(p.W, vp), data) - objective_params(TwoLayerParams(p.W, vm), data)) / (2 * h)
        assert gv[i] == pytest.approx(fd, abs=1e-6)
