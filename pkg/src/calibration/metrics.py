"""Localization error summaries."""
from typing import Dict, Optional, Sequence

import numpy as np

from src.errors import DimensionError

METRIC_KEYS = ("count", "mean", "median", "p25", "p75", "std")


def position_errors(estimates: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Euclidean error per row; NaN where the true position is unknown."""
    est = np.asarray(estimates, dtype=float).reshape(-1, 2)
    tru = np.asarray(truth, dtype=float).reshape(-1, 2)
    if est.shape != tru.shape:
        raise DimensionError(f"{len(est)} estimates but {len(tru)} true positions")
    return np.linalg.norm(est - tru, axis=1)


def error_metrics(
    estimates: np.ndarray,
    truth: np.ndarray,
    exclude: Optional[Sequence[int]] = None,
) -> Dict[str, Optional[float]]:
    """
    Median, mean, std and quartiles of the localization error.

    Args:
        estimates: (M, 2) estimated positions.
        truth: (M, 2) true positions, NaN rows for unknown.
        exclude: indices left out of the summary (the anchors).

    Returns:
        Dict with count, mean, median, p25, p75, std; None values when no
        item qualifies.
    """
    err = position_errors(estimates, truth)
    keep = np.isfinite(err)
    if exclude is not None and len(exclude):
        keep[np.asarray(exclude, dtype=int)] = False
    values = err[keep]
    if values.size == 0:
        return {"count": 0, "mean": None, "median": None, "p25": None, "p75": None, "std": None}
    return {
        "count": int(values.size),
        "mean": float(np.mean(values)),
        "median": float(np.median(values)),
        "p25": float(np.percentile(values, 25)),
        "p75": float(np.percentile(values, 75)),
        "std": float(np.std(values)),
    }
