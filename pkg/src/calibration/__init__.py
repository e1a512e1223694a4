from src.calibration.solver import (
    CalibrationModel,
    SharedAnchors,
    calibrate,
    calibration_gradient,
    calibration_objective,
    smoothness_penalty,
    solve_calibration,
)
from src.calibration.localize import extend_many, extend_out_of_sample, localize_1nn, matching_loss
from src.calibration.anchors import select_anchors
from src.calibration.metrics import error_metrics, position_errors
from src.calibration.sweep import SweepResult, SweepRow, sweep_grid, sweep_lambda

__all__ = [
    "CalibrationModel",
    "SharedAnchors",
    "SweepResult",
    "SweepRow",
    "calibrate",
    "calibration_gradient",
    "calibration_objective",
    "error_metrics",
    "extend_many",
    "extend_out_of_sample",
    "localize_1nn",
    "matching_loss",
    "position_errors",
    "select_anchors",
    "smoothness_penalty",
    "solve_calibration",
    "sweep_grid",
    "sweep_lambda",
]
