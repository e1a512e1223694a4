"""
Closed-form calibration of the signal embedding onto the area embedding.

With psi = C phi_S, the objective

    (1/N) sum_i |phi_A(y_i) - C phi_S(S^i)|^2 + (lambda/d) Tr(C phi_S^T L^S phi_S C^T)

is quadratic in C and is minimized by

    C = (sum_i phi_A(y_i) phi_S(S^i)^T) (sum_j phi_S(S^j) phi_S(S^j)^T + (lambda N / d) phi_S^T L^S phi_S)^-1

where both sums run over the same anchors.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, solve

from config.manager import settings
from src.errors import DataError, DimensionError, IllPosedCalibrationError, ParameterError
from src.floorplan.plan import AreaSample
from src.graph.spectral import Embedding, Laplacian, explicit_regularizer

SIGN_CONVENTION = "max-abs-positive"


@dataclass(frozen=True)
class SharedAnchors:
    """Devices with known positions: signal row i_k corresponds to area row a_k."""

    indices_in_signals: tuple
    indices_in_area: tuple

    def __post_init__(self):
        sig = tuple(int(i) for i in self.indices_in_signals)
        area = tuple(int(i) for i in self.indices_in_area)
        if len(sig) < 1:
            raise ParameterError("at least one anchor is required")
        if len(sig) != len(area):
            raise ParameterError(f"anchor index lists differ in length ({len(sig)} vs {len(area)})")
        if len(set(sig)) != len(sig) or len(set(area)) != len(area):
            raise ParameterError("anchor indices must not repeat")
        object.__setattr__(self, "indices_in_signals", sig)
        object.__setattr__(self, "indices_in_area", area)

    @property
    def n(self) -> int:
        return len(self.indices_in_signals)

    @classmethod
    def leading(cls, indices_in_signals: Sequence[int]) -> "SharedAnchors":
        """Anchors placed as the first N rows of the area sample."""
        sig = tuple(int(i) for i in indices_in_signals)
        return cls(sig, tuple(range(len(sig))))

    def subset(self, positions: Sequence[int]) -> "SharedAnchors":
        return SharedAnchors(
            tuple(self.indices_in_signals[p] for p in positions),
            tuple(self.indices_in_area[p] for p in positions),
        )


@dataclass(frozen=True)
class CalibrationModel:
    C: np.ndarray  # (l, d)
    lam: float
    d: int
    l: int
    area_embedding: Embedding
    area_points: Optional[AreaSample] = None

    def to_dict(self) -> dict:
        return {
            "C": self.C.ravel(order="C").tolist(),
            "lambda": float(self.lam),
            "d": int(self.d),
            "l": int(self.l),
            "sign_convention": SIGN_CONVENTION,
        }


def _anchor_rows(signal_emb: Embedding, area_emb: Embedding, anchors: SharedAnchors):
    sig = np.asarray(anchors.indices_in_signals)
    area = np.asarray(anchors.indices_in_area)
    if sig.max() >= len(signal_emb) or sig.min() < 0:
        raise DataError(f"anchor signal index out of range for {len(signal_emb)} signals")
    if area.max() >= len(area_emb) or area.min() < 0:
        raise DataError(f"anchor area index out of range for {len(area_emb)} area points")
    return signal_emb.vectors[sig], area_emb.vectors[area]


def _regularizer(signal_emb: Embedding, signal_lap: Optional[Laplacian], explicit: bool) -> np.ndarray:
    if explicit:
        if signal_lap is None:
            raise ParameterError("the explicit regularizer needs the signal Laplacian")
        if signal_lap.size != len(signal_emb):
            raise DimensionError("signal Laplacian and signal embedding differ in size")
        return explicit_regularizer(signal_emb, signal_lap)
    return np.diag(signal_emb.eigenvalues)


def solve_calibration(
    signal_emb: Embedding,
    area_emb: Embedding,
    anchors: SharedAnchors,
    signal_lap: Optional[Laplacian] = None,
    lam: float = 0.01,
    *,
    area_points: Optional[AreaSample] = None,
    explicit: bool = False,
) -> CalibrationModel:
    """
    Fit the calibration matrix C in closed form.

    Args:
        signal_emb: phi_S, M x d.
        area_emb: phi_A, T x l.
        anchors: shared points linking signal rows to area rows.
        signal_lap: L^S; only read when ``explicit`` is set.
        lam: regularization weight, nonnegative.
        area_points: the area sample, kept on the model for localization.
        explicit: use phi_S^T L^S phi_S instead of diag(eigenvalues).

    Returns:
        CalibrationModel holding C (l x d).
    """
    if lam < 0:
        raise ParameterError(f"lambda must be nonnegative, got {lam}")
    phi_s, phi_a = _anchor_rows(signal_emb, area_emb, anchors)
    n, d = phi_s.shape
    reg = _regularizer(signal_emb, signal_lap, explicit)

    gram = phi_s.T @ phi_s + (lam * n / d) * reg
    gram = (gram + gram.T) / 2
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > settings.calibration.max_condition:
        raise IllPosedCalibrationError(
            f"regularized Gram matrix is singular (condition {cond:.3e}, N={n}, d={d}, lambda={lam}); "
            f"use lambda > 0 or a smaller d"
        )
    rhs = phi_a.T @ phi_s
    try:
        c = solve(gram, rhs.T, assume_a="sym").T
    except LinAlgError as e:
        raise IllPosedCalibrationError(f"calibration solve failed: {e}; use lambda > 0 or a smaller d") from e
    c.setflags(write=False)
    return CalibrationModel(C=c, lam=float(lam), d=d, l=phi_a.shape[1],
                            area_embedding=area_emb, area_points=area_points)


def calibrate(model: CalibrationModel, signal_emb) -> np.ndarray:
    """psi_j = C phi_S(S^j) for every signal row."""
    phi = signal_emb.vectors if isinstance(signal_emb, Embedding) else np.asarray(signal_emb, dtype=float)
    if phi.ndim != 2 or phi.shape[1] < model.d:
        raise DimensionError(f"signal embedding has {phi.shape[-1]} columns, the model needs {model.d}")
    return phi[:, :model.d] @ model.C.T


def calibration_objective(
    c: np.ndarray,
    signal_emb: Embedding,
    area_emb: Embedding,
    anchors: SharedAnchors,
    lam: float,
    signal_lap: Optional[Laplacian] = None,
    explicit: bool = False,
) -> float:
    phi_s, phi_a = _anchor_rows(signal_emb, area_emb, anchors)
    n, d = phi_s.shape
    reg = _regularizer(signal_emb, signal_lap, explicit)
    fit = np.sum((phi_a - phi_s @ c.T) ** 2) / n
    return float(fit + (lam / d) * np.trace(c @ reg @ c.T))


def calibration_gradient(
    c: np.ndarray,
    signal_emb: Embedding,
    area_emb: Embedding,
    anchors: SharedAnchors,
    lam: float,
    signal_lap: Optional[Laplacian] = None,
    explicit: bool = False,
) -> np.ndarray:
    """Derivative of the calibration objective with respect to C; zero at the solution."""
    phi_s, phi_a = _anchor_rows(signal_emb, area_emb, anchors)
    n, d = phi_s.shape
    reg = _regularizer(signal_emb, signal_lap, explicit)
    residual = phi_a - phi_s @ c.T
    return -(2.0 / n) * residual.T @ phi_s + (2.0 * lam / d) * c @ reg


def smoothness_penalty(model: CalibrationModel, signal_emb: Embedding) -> float:
    """Tr(C phi^T L phi C^T) with the stored eigenvalues."""
    reg = np.diag(signal_emb.eigenvalues[:model.d])
    return float(np.trace(model.C @ reg @ model.C.T))
