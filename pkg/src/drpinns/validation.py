"""Small input-validation helpers shared by the public API."""

import numpy as np

from .exceptions import InputDimensionError, InvalidDomainError


def check_box(box):
    """Return the domain box as a (d, 2) float array, rejecting degenerate axes."""
    b = np.asarray(box, dtype=float)
    if b.ndim == 1 and b.shape == (2,):
        b = b[None, :]
    if b.ndim != 2 or b.shape[1] != 2:
        raise InvalidDomainError(f"box must have shape (d, 2), got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise InvalidDomainError("box bounds must be finite")
    if np.any(b[:, 1] <= b[:, 0]):
        raise InvalidDomainError("box has a zero- or negative-width axis")
    return b


def check_points(x, dim):
    """Return points as an (n, dim) float array.

    Accepts a single point of length ``dim``, or an (n, dim) batch.  For
    one-dimensional problems a flat length-n vector is read as n points.
    Returns ``(points, single)`` where ``single`` flags a lone input point.
    """
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim == 1:
        if a.shape[0] == dim:
            return a.reshape(1, dim), True
        if dim == 1:
            return a.reshape(-1, 1), False
        raise InputDimensionError(
            f"expected a point of dimension {dim}, got length {a.shape[0]}"
        )
    if a.ndim == 2 and a.shape[1] == dim:
        return a, False
    raise InputDimensionError(
        f"expected points of shape (n, {dim}), got {a.shape}"
    )


def check_finite(a, what):
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} contains non-finite values")
    return a
