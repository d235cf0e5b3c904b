import math

import numpy as np
import pytest

from drpinns import autodiff as ad
from drpinns import network as nw
from drpinns.exceptions import (
    InputDimensionError,
    InvalidArchitectureError,
    NonFiniteLossError,
)


def test_init_shapes_contract():
    p = nw.init_params([1, 4, 1], "tanh", 42)
    assert p.weights[0].shape == (4, 1)
    assert p.biases[0].shape == (4,)
    assert p.weights[1].shape == (1, 4)
    assert p.biases[1].shape == (1,)
    assert all(np.all(b == 0) for b in p.biases)


def test_init_deterministic_per_seed():
    a = nw.init_params([2, 8, 8, 1], "tanh", 42)
    b = nw.init_params([2, 8, 8, 1], "tanh", 42)
    c = nw.init_params([2, 8, 8, 1], "tanh", 43)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
    assert not np.array_equal(a.weights[0], c.weights[0])


@pytest.mark.parametrize("sizes", [[2, 0, 1], [1], [2, 4, 3], [-1, 1]])
def test_init_rejects_bad_architectures(sizes):
    with pytest.raises(InvalidArchitectureError):
        nw.init_params(sizes, "tanh", 1)


def test_init_rejects_unknown_activation():
    with pytest.raises(InvalidArchitectureError):
        nw.init_params([1, 4, 1], "softplus", 1)


def test_forward_zero_weights_gives_final_bias():
    p = nw.init_params([2, 5, 1], "tanh", 0)
    for w in p.weights:
        w[:] = 0.0
    p.biases[-1][:] = 0.75
    assert nw.forward(p, [0.3, -0.9]) == 0.75
    assert np.allclose(nw.forward(p, np.random.rand(7, 2)), 0.75)


def test_forward_single_affine_layer():
    p = nw.NetworkParams([1, 1], "tanh", [np.array([[2.0]])], [np.array([1.0])])
    assert nw.forward(p, [3.0]) == pytest.approx(7.0, abs=0)


def test_forward_two_layer_tanh_hand_value():
    p = nw.NetworkParams(
        [1, 1, 1], "tanh",
        [np.array([[1.0]]), np.array([[2.0]])],
        [np.array([0.0]), np.array([0.0])],
    )
    assert nw.forward(p, [1.0]) == pytest.approx(2.0 * math.tanh(1.0), rel=1e-15)


def test_forward_dimension_mismatch():
    p = nw.init_params([2, 4, 1], "tanh", 0)
    with pytest.raises(InputDimensionError):
        nw.forward(p, [1.0, 2.0, 3.0])


def test_forward_deterministic_bits():
    p = nw.init_params([3, 8, 8, 1], "tanh", 5)
    x = np.random.default_rng(1).uniform(-1, 1, (11, 3))
    u1 = nw.forward(p, x)
    u2 = nw.forward(p, x)
    assert np.array_equal(u1, u2)


def test_doubling_output_layer_doubles_output():
    p = nw.init_params([2, 6, 1], "tanh", 3)
    x = np.random.default_rng(2).uniform(-1, 1, (5, 2))
    u1 = nw.forward(p, x)
    q = p.copy()
    q.weights[-1] *= 2.0
    q.biases[-1] *= 2.0
    assert np.allclose(nw.forward(q, x), 2.0 * u1, rtol=1e-14)


def test_grad_input_affine():
    p = nw.NetworkParams([1, 1], "tanh", [np.array([[2.0]])], [np.array([1.0])])
    assert np.allclose(nw.grad_input(p, [3.0]), [2.0])


def test_grad_input_two_layer_hand_value():
    p = nw.NetworkParams(
        [1, 1, 1], "tanh",
        [np.array([[1.0]]), np.array([[2.0]])],
        [np.array([0.0]), np.array([0.0])],
    )
    expected = 2.0 * (1.0 - math.tanh(1.0) ** 2)
    assert np.allclose(nw.grad_input(p, [1.0]), [expected], rtol=1e-14)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_grad_input_matches_central_differences(dim):
    # contract: within 1e-4 relative of central differences at h=1e-5
    rng = np.random.default_rng(dim)
    p = nw.init_params([dim, 16, 16, 16, 1], "tanh", dim + 10)
    x = rng.uniform(-1, 1, (9, dim))
    g = nw.grad_input(p, x)
    h = 1e-5
    for k in range(dim):
        xp = x.copy(); xp[:, k] += h
        xm = x.copy(); xm[:, k] -= h
        fd = (nw.forward(p, xp) - nw.forward(p, xm)) / (2 * h)
        rel = np.abs(fd - g[:, k]) / np.maximum(np.abs(g[:, k]), 1e-8)
        assert rel.max() <= 1e-4


def test_grad_input_relu_kink_uses_zero_subgradient():
    p = nw.NetworkParams(
        [1, 1, 1], "relu",
        [np.array([[1.0]]), np.array([[1.0]])],
        [np.array([0.0]), np.array([0.0])],
    )
    # pre-activation is exactly zero at x=0: one-sided subgradient 0
    assert np.allclose(nw.grad_input(p, [0.0]), [0.0])
    assert np.allclose(nw.grad_input(p, [1.0]), [1.0])


def test_grad_params_constant_loss_is_zero():
    p = nw.init_params([2, 4, 1], "tanh", 0)
    gw, gb = nw.grad_params(p, lambda tp: ad.Var(np.float64(3.5)))
    assert all(np.all(g == 0) for g in gw + gb)


def test_grad_params_linear_in_parameters():
    p = nw.NetworkParams([1, 1], "tanh", [np.array([[2.0]])], [np.array([1.0])])
    x0 = np.array([[3.0]])

    def loss(tp):
        return ad.reshape(nw.network_output(tp.weights, tp.biases, tp.activation, x0), ())

    gw, gb = nw.grad_params(p, loss)
    assert gw[0] == pytest.approx(3.0)
    assert gb[0] == pytest.approx(1.0)


def test_grad_params_boundary_loss_matches_fd():
    rng = np.random.default_rng(7)
    p = nw.init_params([2, 8, 8, 1], "tanh", 11)
    xb = rng.uniform(-1, 1, (6, 2))
    gb_target = rng.uniform(-1, 1, 6)

    def loss(tp):
        u = ad.reshape(nw.network_output(tp.weights, tp.biases, tp.activation, xb), (6,))
        return ad.amean((u - gb_target) ** 2)

    gw, gbias = nw.grad_params(p, loss)

    def loss_value(q):
        u = nw.forward(q, xb)
        return float(np.mean((u - gb_target) ** 2))

    h = 1e-5
    worst = 0.0
    for arrs, grads in ((p.weights, gw), (p.biases, gbias)):
        for l, arr in enumerate(arrs):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                qp = p.copy(); (qp.weights if arrs is p.weights else qp.biases)[l][idx] += h
                qm = p.copy(); (qm.weights if arrs is p.weights else qm.biases)[l][idx] -= h
                fd = (loss_value(qp) - loss_value(qm)) / (2 * h)
                rel = abs(fd - grads[l][idx]) / max(abs(grads[l][idx]), 1e-8)
                worst = max(worst, rel)
    assert worst <= 1e-4


def test_grad_params_is_additive_over_points():
    p = nw.init_params([1, 6, 1], "tanh", 2)
    pts = np.array([[0.1], [0.5], [0.9]])

    def loss_all(tp):
        u = nw.network_output(tp.weights, tp.biases, tp.activation, pts)
        return ad.asum(u * u)

    gw_all, gb_all = nw.grad_params(p, loss_all)
    acc_w = [np.zeros_like(w) for w in p.weights]
    acc_b = [np.zeros_like(b) for b in p.biases]
    for i in range(3):
        def loss_one(tp, i=i):
            u = nw.network_output(tp.weights, tp.biases, tp.activation, pts[i:i + 1])
            return ad.asum(u * u)
        gw, gb = nw.grad_params(p, loss_one)
        acc_w = [a + g for a, g in zip(acc_w, gw)]
        acc_b = [a + g for a, g in zip(acc_b, gb)]
    for a, g in zip(acc_w + acc_b, gw_all + gb_all):
        assert np.allclose(a, g, rtol=1e-10, atol=1e-14)


def test_grad_params_rejects_non_finite_loss():
    p = nw.init_params([1, 4, 1], "tanh", 0)
    with pytest.raises(NonFiniteLossError):
        nw.grad_params(p, lambda tp: ad.Var(np.float64("nan")))


def test_checkpoint_roundtrip_exact(tmp_path):
    p = nw.init_params([2, 8, 8, 1], "sigmoid", 9)
    path = tmp_path / "ckpt.json"
    nw.save_checkpoint(p, path)
    q = nw.load_checkpoint(path)
    assert q.layer_sizes == p.layer_sizes
    assert q.activation == "sigmoid"
    for a, b in zip(p.weights + p.biases, q.weights + q.biases):
        assert np.array_equal(a, b)


def test_checkpoint_rejects_mismatched_arrays(tmp_path):
    p = nw.init_params([2, 4, 1], "tanh", 0)
    path = tmp_path / "ckpt.json"
    nw.save_checkpoint(p, path)
    import json
    payload = json.loads(path.read_text())
    payload["layer_sizes"] = [2, 5, 1]
    path.write_text(json.dumps(payload))
    with pytest.raises(InvalidArchitectureError):
        nw.load_checkpoint(path)
