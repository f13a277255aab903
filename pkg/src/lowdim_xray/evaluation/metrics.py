"""NMSE and box-and-whisker summary statistics."""

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..errors import ShapeError, ValidationError, ZeroNormError


def nmse(y: np.ndarray, y_hat: np.ndarray) -> float:
    """``||y - y_hat||^2 / ||y||^2``."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ShapeError(f"shapes differ: {y.shape} vs {y_hat.shape}")
    norm = float(np.sum(y**2))
    if norm == 0.0:
        raise ZeroNormError("NMSE is undefined for a zero reference spectrum")
    return float(np.sum((y - y_hat) ** 2)) / norm


def nmse_rows(y: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
    """Row-wise NMSE of two matrices."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    y_hat = np.atleast_2d(np.asarray(y_hat, dtype=float))
    if y.shape != y_hat.shape:
        raise ShapeError(f"shapes differ: {y.shape} vs {y_hat.shape}")
    norms = np.sum(y**2, axis=1)
    if np.any(norms == 0.0):
        raise ZeroNormError(f"zero reference spectrum in row(s) {np.flatnonzero(norms == 0.0).tolist()}")
    return np.sum((y - y_hat) ** 2, axis=1) / norms


@dataclass(frozen=True)
class BoxStats:
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    mean: float
    outliers: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def boxplot_stats(values: np.ndarray) -> BoxStats:
    """Quartiles by linear interpolation; whiskers reach the extreme points within 1.5 IQR of the box."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValidationError("cannot summarize an empty sample")
    q1, median, q3 = (float(q) for q in np.percentile(values, [25.0, 50.0, 75.0], method="linear"))
    iqr = q3 - q1
    low_fence, high_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= low_fence) & (values <= high_fence)]
    outliers = np.sort(values[(values < low_fence) | (values > high_fence)])
    return BoxStats(
        median=median,
        q1=q1,
        q3=q3,
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        mean=float(values.mean()),
        outliers=[float(v) for v in outliers],
    )
