"""
Hyperparameter selection by the matching loss.

For every lambda (and optionally every embedding dimension d) the calibration
is refit, the signal embedding is calibrated and the matching loss between the
calibrated cloud and the area embedding is recorded. The selected value is the
one with the smallest loss. When enough anchors exist, a k-fold anchor
cross-validated localization error is reported next to the loss.
"""
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.model_selection import KFold

from src.calibration.localize import localize_1nn, matching_loss
from src.calibration.metrics import error_metrics
from src.calibration.solver import SharedAnchors, calibrate, solve_calibration
from src.errors import LocalizationError, NumericalError, ParameterError
from src.floorplan.plan import as_points
from src.graph.spectral import Embedding, Laplacian


@dataclass
class SweepRow:
    lam: float
    d: int
    loss: Optional[float] = None
    cv_error: Optional[float] = None
    median_error: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepResult:
    rows: List[SweepRow] = field(default_factory=list)
    best_lambda: Optional[float] = None
    best_d: Optional[int] = None

    def to_dict(self) -> Dict:
        return {
            "best_d": self.best_d,
            "best_lambda": self.best_lambda,
            "rows": [asdict(r) for r in self.rows],
        }

    def select(self) -> "SweepResult":
        """Pick the row with the smallest loss; the first one wins ties."""
        fitted = [r for r in self.rows if r.ok]
        if not fitted:
            raise NumericalError("every sweep point failed: " + "; ".join(
                f"lambda={r.lam}, d={r.d}: {r.error}" for r in self.rows))
        best = min(fitted, key=lambda r: r.loss)
        self.best_lambda, self.best_d = best.lam, best.d
        return self


def _cv_error(
    signal_emb: Embedding,
    area_emb: Embedding,
    anchors: SharedAnchors,
    area_points: np.ndarray,
    lam: float,
    folds: int,
    seed: int,
    signal_lap: Optional[Laplacian],
    explicit: bool,
) -> Optional[float]:
    """Median error on held-out anchors over ``folds`` splits; None when N < 2 * folds."""
    if folds < 2 or anchors.n < 2 * folds:
        return None
    errors = []
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    for train, test in splitter.split(np.arange(anchors.n)):
        try:
            model = solve_calibration(signal_emb, area_emb, anchors.subset(train), signal_lap, lam,
                                      explicit=explicit)
        except NumericalError:
            return None
        held = anchors.subset(test)
        psi = calibrate(model, signal_emb.vectors[list(held.indices_in_signals)])
        est = localize_1nn(psi, area_emb, area_points)
        truth = area_points[list(held.indices_in_area)]
        errors.append(np.linalg.norm(est - truth, axis=1))
    return float(np.median(np.concatenate(errors)))


def sweep_lambda(
    signal_emb: Embedding,
    area_emb: Embedding,
    anchors: SharedAnchors,
    lambda_grid: Sequence[float],
    *,
    area_points=None,
    signal_lap: Optional[Laplacian] = None,
    truth: Optional[np.ndarray] = None,
    folds: int = 5,
    seed: int = 0,
    explicit: bool = False,
    select: bool = True,
) -> SweepResult:
    """
    Fit the calibration for every lambda in the grid and score it.

    Args:
        signal_emb: signal embedding; all of its columns are used (d = signal_emb.dim).
        area_emb: area embedding.
        anchors: shared points.
        lambda_grid: nonnegative values, at least one.
        area_points: area sample positions; enables the anchor cross-validation
            and the true-error column.
        signal_lap: passed through to the solver (explicit regularizer only).
        truth: (M, 2) true positions, NaN where unknown; adds the median error
            over non-anchors.
        folds: anchor folds for cross-validation.
        seed: fold shuffling seed.
        explicit: use the explicit regularizer.
        select: pick the best row before returning.

    Returns:
        SweepResult with one row per lambda; failed fits carry the error text.
    """
    grid = [float(v) for v in lambda_grid]
    if not grid:
        raise ParameterError("lambda grid is empty")
    if any(v < 0 for v in grid):
        raise ParameterError("lambda grid values must be nonnegative")
    points = as_points(area_points) if area_points is not None else None

    result = SweepResult()
    for lam in grid:
        row = SweepRow(lam=lam, d=signal_emb.dim)
        try:
            model = solve_calibration(signal_emb, area_emb, anchors, signal_lap, lam, explicit=explicit)
            psi = calibrate(model, signal_emb)
            row.loss = matching_loss(area_emb, psi)
            if points is not None:
                row.cv_error = _cv_error(signal_emb, area_emb, anchors, points, lam, folds, seed,
                                         signal_lap, explicit)
                if truth is not None:
                    est = localize_1nn(psi, area_emb, points)
                    row.median_error = error_metrics(est, truth, anchors.indices_in_signals)["median"]
        except LocalizationError as e:
            row.error = str(e)
        result.rows.append(row)
    return result.select() if select else result


def sweep_grid(
    signal_emb: Embedding,
    area_emb: Embedding,
    anchors: SharedAnchors,
    lambda_grid: Sequence[float],
    d_grid: Sequence[int],
    **kwargs,
) -> SweepResult:
    """
    Joint (d, lambda) sweep over truncations of one embedding computed at max(d_grid) columns.
    """
    dims = sorted({int(d) for d in d_grid})
    if not dims:
        raise ParameterError("d grid is empty")
    if dims[0] < 1 or dims[-1] > signal_emb.dim:
        raise ParameterError(f"d grid must lie in [1, {signal_emb.dim}]")
    combined = SweepResult()
    for d in dims:
        part = sweep_lambda(signal_emb.truncate(d), area_emb, anchors, lambda_grid, select=False, **kwargs)
        combined.rows.extend(part.rows)
    return combined.select()
