"""Three-term energy loss for obstacle-type variational inequalities.

The trained objective is

    total = w1 * energy + w2 * constraint + w3 * boundary

where, as plain Monte Carlo means over the collocation points (no volume
factor; the weights absorb scaling),

    energy     = mean( 0.5*|grad u|^2 + 0.5*alpha*u^2 - f*u )   interior
    constraint = mean( max(psi - u, 0) )                        interior
    boundary   = mean( (u - g)^2 )                              boundary

The constraint term is the plain hinge, not its square, and vanishes
exactly on feasible iterates.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import val
from .exceptions import EmptyInputError, NonFiniteLossError
from .network import network_output, network_output_and_gradient


@dataclass(frozen=True)
class LossWeights:
    """Non-negative weights (w1, w2, w3); at least one must be positive."""

    w1: float
    w2: float
    w3: float

    def __post_init__(self):
        vals = (self.w1, self.w2, self.w3)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("loss weights must be finite")
        if any(v < 0 for v in vals):
            raise ValueError("loss weights must be non-negative")
        if all(v == 0 for v in vals):
            raise ValueError("at least one loss weight must be positive")

    def direction(self):
        """Weights scaled to sum to one."""
        s = self.magnitude()
        return (self.w1 / s, self.w2 / s, self.w3 / s)

    def magnitude(self):
        return self.w1 + self.w2 + self.w3

    def as_array(self):
        return np.array([self.w1, self.w2, self.w3])


@dataclass
class LossBreakdown:
    energy: float
    constraint: float
    boundary: float
    total: float


def interior_terms(weights, biases, activation, x, f_vals, psi_vals, alpha):
    """Energy and hinge means plus their per-point integrands.

    Runs on plain arrays or tape nodes; returns
    (energy, constraint, energy_pointwise, hinge_pointwise).
    """
    n = x.shape[0]
    u, g = network_output_and_gradient(weights, biases, activation, x)
    u1 = ad.reshape(u, (n,))
    e_pt = ad.asum(g * g, axis=1) * 0.5 - f_vals * u1
    if alpha != 0.0:
        e_pt = e_pt + (0.5 * alpha) * (u1 * u1)
    hinge = ad.relu(psi_vals - u1)
    return ad.amean(e_pt), ad.amean(hinge), e_pt, hinge


def boundary_mismatch(weights, biases, activation, xb, g_vals):
    m = xb.shape[0]
    ub = ad.reshape(network_output(weights, biases, activation, xb), (m,))
    r = ub - g_vals
    return ad.amean(r * r)


def _check_term(value, term):
    if not np.isfinite(value):
        raise NonFiniteLossError(f"{term} term evaluated to {value}", term=term)
    return float(value)


def energy_term(params, interior, problem):
    """Monte Carlo Ritz energy over the interior points."""
    x = np.asarray(interior, dtype=float).reshape(-1, problem.dim)
    if x.shape[0] == 0:
        raise EmptyInputError("energy_term needs at least one interior point")
    e, _, _, _ = interior_terms(
        params.weights, params.biases, params.activation,
        x, problem.f(x), problem.psi(x), problem.alpha,
    )
    return _check_term(val(e), "energy")


def constraint_term(params, interior, problem):
    """Mean hinge violation max(psi - u, 0) over the interior points."""
    x = np.asarray(interior, dtype=float).reshape(-1, problem.dim)
    if x.shape[0] == 0:
        raise EmptyInputError("constraint_term needs at least one interior point")
    _, c, _, _ = interior_terms(
        params.weights, params.biases, params.activation,
        x, problem.f(x), problem.psi(x), problem.alpha,
    )
    return _check_term(val(c), "constraint")


def boundary_term(params, boundary, problem):
    """Mean squared boundary mismatch (u - g)^2."""
    xb = np.asarray(boundary, dtype=float).reshape(-1, problem.dim)
    if xb.shape[0] == 0:
        raise EmptyInputError("boundary_term needs at least one boundary point")
    b = boundary_mismatch(
        params.weights, params.biases, params.activation, xb, problem.g(xb)
    )
    return _check_term(val(b), "boundary")


def total_loss(energy, constraint, boundary, weights):
    """Combine the three term values under the given weights."""
    energy = _check_term(energy, "energy")
    constraint = _check_term(constraint, "constraint")
    boundary = _check_term(boundary, "boundary")
    total = weights.w1 * energy + weights.w2 * constraint + weights.w3 * boundary
    return LossBreakdown(energy, constraint, boundary, _check_term(total, "total"))


def pointwise_residuals(params, x, f_vals, psi_vals, alpha, weights):
    """Per-interior-point residual driving adaptive resampling.

    The energy integrand is clamped at zero so the residual is a
    non-negative focus score; the hinge contributes as is.
    """
    _, _, e_pt, hinge = interior_terms(
        params.weights, params.biases, params.activation, x, f_vals, psi_vals, alpha
    )
    e_pt = val(e_pt)
    hinge = val(hinge)
    return weights.w1 * np.maximum(e_pt, 0.0) + weights.w2 * hinge
