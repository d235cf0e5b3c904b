"""Dense scalar-output networks and their derivatives.

The same kernels run on plain arrays (fast evaluation) and on tape nodes
(training), so the value a loss sees and the value the gradient is taken
of are always the same expression.  Hidden layers are affine maps followed
by the activation; the output layer is purely affine.

For the energy functional we need, per input point, both u(x) and its
spatial gradient.  Because the output is scalar, the input gradient is
cheapest as the reverse chain through the affine layers,

    t = act'(Z_last) * W_out
    t = act'(Z_l) * (t @ W_{l+1})     walking down the hidden layers
    grad u = t @ W_0

whose per-point arrays stay (n, width) for every input dimension.  The
chain is built from tape primitives, so training losses that contain
grad u remain exactly differentiable with respect to the weights.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var, val
from .exceptions import (
    InvalidArchitectureError,
    NonFiniteLossError,
)
from .validation import check_points

ACTIVATIONS = ("tanh", "relu", "sigmoid")


@dataclass
class NetworkParams:
    """Weights and biases of a scalar-output dense network.

    ``weights[l]`` has shape (layer_sizes[l+1], layer_sizes[l]);
    ``biases[l]`` has length layer_sizes[l+1].  Entries are plain arrays,
    except inside :func:`grad_params` where they are tape nodes.
    """

    layer_sizes: list
    activation: str
    weights: list
    biases: list

    @property
    def input_dim(self):
        return self.layer_sizes[0]

    def copy(self):
        return NetworkParams(
            list(self.layer_sizes),
            self.activation,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def arrays(self):
        """Flat list of parameter arrays: all weights, then all biases."""
        return list(self.weights) + list(self.biases)


def init_params(layer_sizes, activation="tanh", seed=0):
    """Create a network with scaled zero-mean weights and zero biases.

    Weights are drawn from N(0, 2 / (fan_in + fan_out)), deterministic per
    seed.  The last layer size must be 1 (scalar field output).
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise InvalidArchitectureError("need at least input and output layers")
    if any(s <= 0 for s in sizes):
        raise InvalidArchitectureError(f"non-positive layer size in {sizes}")
    if sizes[-1] != 1:
        raise InvalidArchitectureError("output layer must have exactly one unit")
    if activation not in ACTIVATIONS:
        raise InvalidArchitectureError(f"unknown activation {activation!r}")

    rng = np.random.default_rng(int(seed) % 2**64)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        std = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(sizes, activation, weights, biases)


def _act(z, name):
    if name == "tanh":
        return ad.tanh(z)
    if name == "relu":
        return ad.relu(z)
    return ad.sigmoid(z)


def _act_prime(z, a, name):
    # relu' is piecewise constant, so it enters the tape as a detached mask
    # (subgradient 0 at the kink); tanh'/sigmoid' stay differentiable.
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return np.where(val(z) > 0.0, 1.0, 0.0)
    return a * (1.0 - a)


def network_output(weights, biases, activation, x):
    """u at each input row; returns shape (n, 1)."""
    a = x
    for w, b in zip(weights[:-1], biases[:-1]):
        a = _act(a @ w.T + b, activation)
    return a @ weights[-1].T + biases[-1]


def network_output_and_gradient(weights, biases, activation, x):
    """u and its input gradient per row; shapes (n, 1) and (n, d)."""
    a = x
    primes = []
    for w, b in zip(weights[:-1], biases[:-1]):
        z = a @ w.T + b
        a = _act(z, activation)
        primes.append(_act_prime(z, a, activation))
    u = a @ weights[-1].T + biases[-1]
    if not primes:
        n = x.shape[0]
        return u, ad.reshape(weights[-1], (1, x.shape[1])) * np.ones((n, 1))
    t = primes[-1] * weights[-1]
    for w, dp in zip(weights[-2:0:-1], primes[-2::-1]):
        t = dp * (t @ w)
    return u, t @ weights[0]


def forward(params, x):
    """Evaluate u(x).  A single point gives a float, a batch gives (n,)."""
    pts, single = check_points(x, params.input_dim)
    u = network_output(params.weights, params.biases, params.activation, pts)
    u = val(u).reshape(-1)
    return float(u[0]) if single else u


def grad_input(params, x):
    """Spatial gradient of u at x: shape (d,) for a point, (n, d) for a batch."""
    pts, single = check_points(x, params.input_dim)
    _, g = network_output_and_gradient(
        params.weights, params.biases, params.activation, pts
    )
    g = val(g)
    return g[0] if single else g


def grad_params(params, loss_evaluator):
    """Gradient of a scalar loss with respect to every weight and bias.

    ``loss_evaluator`` receives a NetworkParams whose entries are tape
    nodes and must return the scalar loss built from them.  Returns
    ``(grad_weights, grad_biases)`` shaped like the parameters; parameters
    the loss never touches get zero gradients.
    """
    wvars = [Var(w) for w in params.weights]
    bvars = [Var(b) for b in params.biases]
    tape_params = NetworkParams(list(params.layer_sizes), params.activation, wvars, bvars)
    out = loss_evaluator(tape_params)
    if not isinstance(out, Var):
        out = Var(np.asarray(out, dtype=float))
    if not np.all(np.isfinite(out.value)):
        raise NonFiniteLossError("loss evaluated to a non-finite value")
    ad.backward(out)
    gw = [v.grad if v.grad is not None else np.zeros_like(v.value) for v in wvars]
    gb = [v.grad if v.grad is not None else np.zeros_like(v.value) for v in bvars]
    return gw, gb


def save_checkpoint(params, path):
    """Write parameters as a JSON checkpoint (row-major weight arrays)."""
    payload = {
        "layer_sizes": [int(s) for s in params.layer_sizes],
        "activation": params.activation,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path):
    with open(path) as fh:
        payload = json.load(fh)
    sizes = [int(s) for s in payload["layer_sizes"]]
    params = NetworkParams(
        sizes,
        payload["activation"],
        [np.asarray(w, dtype=float) for w in payload["weights"]],
        [np.asarray(b, dtype=float) for b in payload["biases"]],
    )
    if params.activation not in ACTIVATIONS:
        raise InvalidArchitectureError(f"unknown activation {params.activation!r}")
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        if w.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
            raise InvalidArchitectureError("checkpoint arrays do not match layer_sizes")
    return params
