"""Error types raised across the package."""


class InvalidArchitectureError(ValueError):
    """Layer sizes that cannot form a scalar-output dense network."""


class InputDimensionError(ValueError):
    """Point dimension does not match the network input layer."""


class InvalidDomainError(ValueError):
    """Degenerate or malformed domain box."""


class InvalidConfigError(ValueError):
    """Run or resampling configuration violates its constraints."""


class EmptyInputError(ValueError):
    """An operation received an empty collection it cannot handle."""


class NonFiniteLossError(ArithmeticError):
    """A loss evaluation produced NaN or infinity.

    ``term`` names the offending contribution when known
    ("energy", "constraint", "boundary" or "total").
    """

    def __init__(self, message, term="total"):
        super().__init__(message)
        self.term = term


class NonFiniteGradientError(ArithmeticError):
    """A gradient entry is NaN or infinite."""


class NonFiniteObservationError(ValueError):
    """A Bayesian-optimization observation has a non-finite loss value."""


class DuplicateObservationError(ValueError):
    """Two observations share the same weights but disagree on the loss."""


class OutOfDomainError(ValueError):
    """A query point lies outside the solution grid."""


class ExactSolutionUnavailable(LookupError):
    """The problem ships no closed-form solution; use the oracle instead."""


class NoReferenceError(LookupError):
    """Neither an exact solution nor an oracle reference could be produced."""
