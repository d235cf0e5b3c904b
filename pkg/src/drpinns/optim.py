"""Parameter updates (Adam) and loss-weight search (GP + expected improvement).

Adam follows the standard first/second-moment recursion with bias
correction; the update denominator is sqrt(v_hat) + eps.

The weight search models observed loss as a function of the three loss
weights with a fixed-hyperparameter RBF Gaussian process in log10-weight
space, and proposes the expected-improvement maximiser over a Latin
hypercube candidate set.  Kernel hyperparameters are fixed rather than
optimised: with a handful of observations in three dimensions, marginal
likelihood fits are noise.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import norm

from .exceptions import (
    DuplicateObservationError,
    NonFiniteGradientError,
    NonFiniteObservationError,
)
from .losses import LossWeights
from .sampling import latin_hypercube

DEFAULT_LOG10_BOUNDS = ((0.0, 6.0), (0.0, 6.0), (0.0, 6.0))


# ---------------------------------------------------------------------------
# Adam

@dataclass
class AdamState:
    """Moment accumulators shaped like the parameter arrays."""

    m: list
    v: list
    t: int
    alpha: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.alpha <= 0 or self.eps <= 0:
            raise ValueError("alpha and eps must be positive")

    @classmethod
    def for_params(cls, params, alpha, beta1=0.9, beta2=0.999, eps=1e-8):
        arrays = params.arrays()
        return cls([np.zeros_like(a) for a in arrays],
                   [np.zeros_like(a) for a in arrays],
                   0, alpha, beta1, beta2, eps)


def adam_step(state, params, grads):
    """One Adam update; mutates and returns (state, params).

    ``grads`` is the (grad_weights, grad_biases) pair produced by
    grad_params, matching the parameter arrays elementwise.
    """
    gw, gb = grads
    garrs = list(gw) + list(gb)
    parrs = params.arrays()
    if len(garrs) != len(parrs):
        raise ValueError("gradient structure does not match parameters")
    for g in garrs:
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError("gradient contains non-finite entries")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for m, v, g, p in zip(state.m, state.v, garrs, parrs):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.alpha * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return state, params


# ---------------------------------------------------------------------------
# Gaussian-process weight search

@dataclass
class BoState:
    """Observed (weights, loss) pairs plus fixed kernel settings."""

    observations: list = field(default_factory=list)
    kernel_lengthscale: float = 1.0
    kernel_variance: float = None  # None: use the observation variance
    noise_jitter: float = 1e-6
    search_bounds: tuple = DEFAULT_LOG10_BOUNDS

    def best_loss(self):
        return min(loss for _, loss in self.observations)


class GpSurrogate:
    """RBF-kernel GP posterior over log10 loss weights."""

    def __init__(self, x_log, y, lengthscale, variance, jitter):
        self.x = x_log
        self.prior_mean = float(np.mean(y))
        sf2 = float(np.var(y)) if variance is None else float(variance)
        self.signal_var = sf2 if sf2 > 0 else 1.0
        self.lengthscale = lengthscale
        self.jitter = jitter
        k = self._kernel(x_log, x_log) + jitter * np.eye(len(y))
        self._cho = cho_factor(k, lower=True)
        self._resid_solve = cho_solve(self._cho, y - self.prior_mean)

    def _kernel(self, a, b):
        d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        return self.signal_var * np.exp(-0.5 * d2 / self.lengthscale**2)

    def predict_log(self, x_log):
        """Posterior mean and variance at log10-space query rows."""
        x_log = np.atleast_2d(x_log)
        ks = self._kernel(x_log, self.x)
        mean = self.prior_mean + ks @ self._resid_solve
        var = self.signal_var - np.sum(ks * cho_solve(self._cho, ks.T).T, axis=1)
        return mean, np.maximum(var, 0.0)

    def predict(self, weights):
        """Posterior mean and variance at raw positive weight rows."""
        w = np.atleast_2d(np.asarray(weights, dtype=float))
        if np.any(w <= 0):
            raise ValueError("weights must be positive to map into log space")
        return self.predict_log(np.log10(w))


def _as_weight_array(w):
    if isinstance(w, LossWeights):
        return w.as_array()
    a = np.asarray(w, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise ValueError("expected three loss weights")
    return a


def gp_fit(observations, lengthscale=1.0, variance=None, jitter=1e-6):
    """Fit the surrogate to (weights, loss) observations."""
    if len(observations) == 0:
        raise ValueError("need at least one observation")
    x = np.array([_as_weight_array(w) for w, _ in observations])
    y = np.array([float(l) for _, l in observations])
    seen = {}
    for row, target in zip(map(tuple, x), y):
        if row in seen and seen[row] != target:
            raise DuplicateObservationError(
                f"weights {row} observed with losses {seen[row]} and {target}"
            )
        seen[row] = target
    xu = np.array([list(k) for k in seen])
    yu = np.array([seen[tuple(r)] for r in xu])
    return GpSurrogate(np.log10(xu), yu, lengthscale, variance, jitter)


def expected_improvement(surrogate, candidate, best_loss):
    """EI for minimisation at one candidate weight triple."""
    mu, var = surrogate.predict(_as_weight_array(candidate))
    return float(_ei_from_posterior(mu, np.sqrt(var), best_loss)[0])


def _ei_from_posterior(mu, sigma, best_loss):
    delta = best_loss - mu
    out = np.maximum(delta, 0.0)
    pos = sigma > 0
    if np.any(pos):
        z = delta[pos] / sigma[pos]
        out = out.astype(float)
        out[pos] = delta[pos] * norm.cdf(z) + sigma[pos] * norm.pdf(z)
    return out


def propose_weights(state, n_candidates=256, seed=0):
    """EI-argmax proposal over a Latin hypercube in log10-weight space."""
    bounds = np.asarray(state.search_bounds, dtype=float)
    if not state.observations:
        pt = latin_hypercube(1, bounds, seed)[0]
        return LossWeights(*(10.0 ** pt))
    surrogate = gp_fit(
        state.observations,
        lengthscale=state.kernel_lengthscale,
        variance=state.kernel_variance,
        jitter=state.noise_jitter,
    )
    cands = latin_hypercube(n_candidates, bounds, seed)
    mu, var = surrogate.predict_log(cands)
    ei = _ei_from_posterior(mu, np.sqrt(var), state.best_loss())
    best = int(np.argmax(ei))
    return LossWeights(*(10.0 ** cands[best]))


def bo_update(state, w_new, observed_loss):
    """Append an observation; identical repeats are ignored."""
    if not np.isfinite(observed_loss):
        raise NonFiniteObservationError(
            f"rejected observation with loss {observed_loss}"
        )
    w = _as_weight_array(w_new)
    for wi, li in state.observations:
        if np.array_equal(_as_weight_array(wi), w):
            if li == observed_loss:
                return state
            raise DuplicateObservationError(
                f"weights {tuple(w)} already observed with loss {li}"
            )
    state.observations.append((w, float(observed_loss)))
    return state
