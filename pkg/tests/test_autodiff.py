import numpy as np
import pytest

from drpinns import autodiff as ad
from drpinns.autodiff import Var


def numeric_grad(fn, x, h=1e-6):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xp[idx] += h
        xm = x.copy()
        xm[idx] -= h
        g[idx] = (fn(xp) - fn(xm)) / (2 * h)
    return g


@pytest.mark.parametrize("expr,val_fn", [
    (lambda x: (x * x).sum(), lambda x: (x * x).sum()),
    (lambda x: (x.tanh() * 3.0).mean(), lambda x: np.mean(np.tanh(x) * 3.0)),
    (lambda x: ((1.0 - x) ** 2).sum(), lambda x: ((1.0 - x) ** 2).sum()),
    (lambda x: (x / 2.0 + x * x * 0.25).sum(), lambda x: (x / 2.0 + x * x * 0.25).sum()),
    (lambda x: (2.0 / (x + 3.0)).sum(), lambda x: (2.0 / (x + 3.0)).sum()),
    (lambda x: x.sigmoid().sum(), lambda x: (1 / (1 + np.exp(-x))).sum()),
])
def test_elementwise_backward_matches_fd(expr, val_fn):
    x0 = np.array([[0.3, -0.7], [1.2, 0.05]])
    v = Var(x0)
    out = expr(v)
    ad.backward(out)
    fd = numeric_grad(lambda x: val_fn(x), x0)
    assert np.allclose(v.grad, fd, rtol=1e-6, atol=1e-9)


def test_matmul_backward_matches_fd():
    rng = np.random.default_rng(0)
    a0 = rng.normal(size=(4, 3))
    b0 = rng.normal(size=(3, 2))
    va, vb = Var(a0), Var(b0)
    out = ((va @ vb) ** 2).sum()
    ad.backward(out)
    fd_a = numeric_grad(lambda a: ((a @ b0) ** 2).sum(), a0)
    fd_b = numeric_grad(lambda b: ((a0 @ b) ** 2).sum(), b0)
    assert np.allclose(va.grad, fd_a, rtol=1e-6)
    assert np.allclose(vb.grad, fd_b, rtol=1e-6)


def test_broadcast_bias_gradient_sums_over_rows():
    a = Var(np.ones((5, 3)))
    b = Var(np.array([1.0, 2.0, 3.0]))
    out = (a + b).sum()
    ad.backward(out)
    assert b.grad.shape == (3,)
    assert np.allclose(b.grad, 5.0)


def test_transpose_and_reshape_roundtrip_gradients():
    x0 = np.arange(6.0).reshape(2, 3)
    v = Var(x0)
    out = (v.T.reshape((6,)) * np.arange(6.0)).sum()
    ad.backward(out)
    fd = numeric_grad(lambda x: (x.T.reshape(6) * np.arange(6.0)).sum(), x0)
    assert np.allclose(v.grad, fd)


def test_relu_subgradient_is_zero_at_kink():
    v = Var(np.array([-1.0, 0.0, 2.0]))
    out = v.relu().sum()
    ad.backward(out)
    assert np.array_equal(v.grad, [0.0, 0.0, 1.0])


def test_shared_node_accumulates_both_paths():
    # diamond graph: y = x*x + 3x must give dy/dx = 2x + 3
    v = Var(np.array([2.0]))
    out = (v * v + 3.0 * v).sum()
    ad.backward(out)
    assert np.allclose(v.grad, [7.0])


def test_mean_with_axis():
    x0 = np.arange(12.0).reshape(3, 4)
    v = Var(x0)
    out = (v.mean(axis=1) * np.array([1.0, 2.0, 3.0])).sum()
    ad.backward(out)
    fd = numeric_grad(lambda x: (x.mean(axis=1) * np.array([1.0, 2.0, 3.0])).sum(), x0)
    assert np.allclose(v.grad, fd)


def test_backward_requires_scalar_root():
    v = Var(np.ones(3))
    with pytest.raises(ValueError):
        ad.backward(v * 2.0)


def test_constant_exponent_only():
    v = Var(np.ones(2))
    with pytest.raises(TypeError):
        _ = v ** v


def test_numpy_left_operand_defers_to_var():
    v = Var(np.array([1.0, 2.0]))
    arr = np.array([3.0, 4.0])
    out = (arr * v).sum() + (arr - v).sum() + (arr.reshape(1, 2) @ v.reshape((2, 1))).sum()
    assert isinstance(out, Var)
    ad.backward(out)
    assert v.grad is not None


def test_matmul_rejects_1d_operands():
    v = Var(np.ones((2, 2)))
    with pytest.raises(ValueError):
        _ = v @ np.ones(2)
    with pytest.raises(ValueError):
        _ = np.ones(2) @ v


def test_dispatchers_pass_plain_arrays_through():
    x = np.array([0.5, -0.5])
    assert isinstance(ad.tanh(x), np.ndarray)
    assert isinstance(ad.relu(x), np.ndarray)
    assert isinstance(ad.sigmoid(x), np.ndarray)
    assert np.allclose(ad.sigmoid(x), 1 / (1 + np.exp(-x)))
    assert ad.val(x) is x
    assert ad.val(Var(x)).shape == (2,)
