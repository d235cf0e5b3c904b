"""Error metrics comparing predictions against reference values."""

from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class MetricReport:
    mse: float
    mae: float
    rel2: float
    max_error: float
    relative_max_error: float
    reference_max: float
    n_points: int
    relative_valid: bool = True

    def to_dict(self):
        return asdict(self)


def compute_metrics(reference, predicted):
    """MSE, MAE, REL2, max error and relative max error.

    ``max_error`` is the infinity norm of the error; ``reference_max`` is
    the infinity norm of the reference itself and also the denominator of
    ``relative_max_error``.  A reference that is identically zero makes the
    relative metrics meaningless: they come back NaN with
    ``relative_valid`` cleared, while the absolute metrics stand.
    """
    y = np.asarray(reference, dtype=float).reshape(-1)
    yhat = np.asarray(predicted, dtype=float).reshape(-1)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape[0]} vs {yhat.shape[0]}")
    if y.size == 0:
        raise ValueError("need at least one value pair")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(yhat))):
        raise ValueError("metrics need finite inputs")

    err = y - yhat
    mse = float(np.mean(err**2))
    mae = float(np.mean(np.abs(err)))
    max_error = float(np.max(np.abs(err)))
    reference_max = float(np.max(np.abs(y)))
    ref_norm = float(np.linalg.norm(y))
    if reference_max == 0.0:
        rel2 = float("nan")
        rel_max = float("nan")
        valid = False
    else:
        rel2 = float(np.linalg.norm(err) / ref_norm)
        rel_max = max_error / reference_max
        valid = True
    return MetricReport(mse, mae, rel2, max_error, rel_max,
                        reference_max, int(y.size), valid)
