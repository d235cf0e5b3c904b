"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Var` wraps an ndarray and records the primitive that produced it;
:func:`backward` replays the recorded operations in reverse topological
order, accumulating adjoints.  Each primitive only knows its first
derivative, but because derivative expressions are themselves built from
primitives (tanh'(z) is written as ``1 - tanh(z)**2``), gradients of
expressions that already contain gradients come out exactly.  That is what
lets a single tape differentiate an energy functional of both u and its
spatial gradient with respect to the network parameters.

Broadcasting follows numpy semantics; adjoints of broadcast operands are
summed back down to the operand's shape.  ``max``-type kinks (relu) use
subgradient 0 at exactly 0, so results are deterministic.
"""

import ctypes
import sys

import numpy as np

__all__ = [
    "Var", "backward", "val", "tanh", "sigmoid", "relu",
    "asum", "amean", "reshape",
]

# The tape allocates and frees many few-hundred-KB buffers per loss
# evaluation.  glibc serves those through mmap/munmap by default, and the
# resulting page-fault churn slows elementwise ops roughly tenfold.  Raising
# the mmap threshold keeps the buffers on the malloc free list.
if sys.platform.startswith("linux"):
    try:
        ctypes.CDLL("libc.so.6").mallopt(-3, 1 << 26)  # M_MMAP_THRESHOLD
    except (OSError, AttributeError):
        pass


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape``, reversing numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Var:
    """A node of the tape: an array value plus an adjoint accumulator."""

    __slots__ = ("value", "grad", "_parents", "_bwd")
    # numpy must defer binary ops to our reflected operators
    __array_ufunc__ = None
    __array_priority__ = 1000

    def __init__(self, value, parents=(), bwd=None):
        self.value = value if isinstance(value, np.ndarray) else np.asarray(value, dtype=float)
        self.grad = None
        self._parents = parents
        self._bwd = bwd

    # -- structure ---------------------------------------------------------

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def T(self):
        out = Var(self.value.swapaxes(-1, -2), (self,))
        out._bwd = lambda g: (g.swapaxes(-1, -2),)
        return out

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        src_shape = self.value.shape
        out = Var(self.value.reshape(shape), (self,))
        out._bwd = lambda g: (g.reshape(src_shape),)
        return out

    def detach(self):
        return Var(self.value)

    def __repr__(self):
        return f"Var(shape={self.value.shape})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Var):
            out = Var(self.value + other.value, (self, other))
            sa, sb = self.value.shape, other.value.shape
            out._bwd = lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb))
        else:
            out = Var(self.value + other, (self,))
            sa = self.value.shape
            out._bwd = lambda g: (_unbroadcast(g, sa),)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Var(-self.value, (self,))
        out._bwd = lambda g: (-g,)
        return out

    def __sub__(self, other):
        if isinstance(other, Var):
            out = Var(self.value - other.value, (self, other))
            sa, sb = self.value.shape, other.value.shape
            out._bwd = lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb))
        else:
            out = Var(self.value - other, (self,))
            sa = self.value.shape
            out._bwd = lambda g: (_unbroadcast(g, sa),)
        return out

    def __rsub__(self, other):
        out = Var(other - self.value, (self,))
        sa = self.value.shape
        out._bwd = lambda g: (_unbroadcast(-g, sa),)
        return out

    def __mul__(self, other):
        if isinstance(other, Var):
            av, bv = self.value, other.value
            out = Var(av * bv, (self, other))
            out._bwd = lambda g: (_unbroadcast(g * bv, av.shape),
                                  _unbroadcast(g * av, bv.shape))
        else:
            av = self.value
            out = Var(av * other, (self,))
            out._bwd = lambda g: (_unbroadcast(g * other, av.shape),)
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            av, bv = self.value, other.value
            out = Var(av / bv, (self, other))
            out._bwd = lambda g: (_unbroadcast(g / bv, av.shape),
                                  _unbroadcast(-g * av / (bv * bv), bv.shape))
        else:
            av = self.value
            out = Var(av / other, (self,))
            out._bwd = lambda g: (_unbroadcast(g / other, av.shape),)
        return out

    def __rtruediv__(self, other):
        av = self.value
        out = Var(other / av, (self,))
        out._bwd = lambda g: (_unbroadcast(-g * other / (av * av), av.shape),)
        return out

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("only constant exponents are supported")
        av = self.value
        out = Var(av ** p, (self,))
        out._bwd = lambda g: (_unbroadcast(g * p * av ** (p - 1), av.shape),)
        return out

    def __matmul__(self, other):
        if self.value.ndim < 2 or (other.ndim if hasattr(other, "ndim") else 2) < 2:
            raise ValueError("matmul on the tape needs 2-D (or batched) operands")
        if isinstance(other, Var):
            av, bv = self.value, other.value
            out = Var(av @ bv, (self, other))
            out._bwd = lambda g: (_unbroadcast(g @ bv.swapaxes(-1, -2), av.shape),
                                  _unbroadcast(av.swapaxes(-1, -2) @ g, bv.shape))
        else:
            av, bv = self.value, other
            out = Var(av @ bv, (self,))
            out._bwd = lambda g: (_unbroadcast(g @ bv.swapaxes(-1, -2), av.shape),)
        return out

    def __rmatmul__(self, other):
        av, bv = other, self.value
        if av.ndim < 2 or bv.ndim < 2:
            raise ValueError("matmul on the tape needs 2-D (or batched) operands")
        out = Var(av @ bv, (self,))
        out._bwd = lambda g: (_unbroadcast(av.swapaxes(-1, -2) @ g, bv.shape),)
        return out

    # -- reductions and nonlinearities --------------------------------------

    def sum(self, axis=None):
        av = self.value
        out = Var(av.sum(axis=axis), (self,))
        if axis is None:
            out._bwd = lambda g: (np.broadcast_to(g, av.shape),)
        else:
            out._bwd = lambda g: (np.broadcast_to(np.expand_dims(g, axis), av.shape),)
        return out

    def mean(self, axis=None):
        av = self.value
        n = av.size if axis is None else av.shape[axis]
        return self.sum(axis=axis) * (1.0 / n)

    def tanh(self):
        t = np.tanh(self.value)
        out = Var(t, (self,))
        out._bwd = lambda g: (g * (1.0 - t * t),)
        return out

    def sigmoid(self):
        s = 0.5 * (1.0 + np.tanh(0.5 * self.value))
        out = Var(s, (self,))
        out._bwd = lambda g: (g * s * (1.0 - s),)
        return out

    def relu(self):
        av = self.value
        mask = av > 0.0
        out = Var(np.where(mask, av, 0.0), (self,))
        out._bwd = lambda g: (g * mask,)
        return out


def backward(root):
    """Accumulate d(root)/d(node) into ``node.grad`` for the whole tape.

    ``root`` must hold a single scalar value.  Adjoints are reset before
    the sweep, so one tape supports one backward pass at a time.
    """
    if root.value.size != 1:
        raise ValueError("backward() expects a scalar root")

    topo = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))

    for node in topo:
        node.grad = None
    root.grad = np.ones_like(root.value)

    for node in reversed(topo):
        if node._bwd is None or node.grad is None:
            continue
        for parent, g in zip(node._parents, node._bwd(node.grad)):
            if parent.grad is None:
                parent.grad = g
            else:
                parent.grad = parent.grad + g


# -- type-generic helpers ---------------------------------------------------
# The network kernels are written once and run on either plain arrays or
# tape nodes; these dispatchers pick the right primitive.

def val(x):
    """Underlying ndarray of ``x`` whether or not it is on the tape."""
    return x.value if isinstance(x, Var) else x


def tanh(x):
    return x.tanh() if isinstance(x, Var) else np.tanh(x)


def sigmoid(x):
    if isinstance(x, Var):
        return x.sigmoid()
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def relu(x):
    return x.relu() if isinstance(x, Var) else np.where(x > 0.0, x, 0.0)


def asum(x, axis=None):
    return x.sum(axis=axis)


def amean(x, axis=None):
    return x.mean(axis=axis)


def reshape(x, shape):
    return x.reshape(shape)
