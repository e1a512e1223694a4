"""
Synthetic signal generators.

Signals follow an inverse-square power decay from a receiver at r0:

    S_i = theta_i * B x_i / dist(x_i, r0)^2

with dist the Euclidean norm (radial model) or the in-plan geodesic distance
(wall model). theta_i is an optional positive per-device gain.
"""
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from src.errors import InfiniteGeodesicError, InsufficientDensityError, ParameterError
from src.floorplan.geodesic import geodesic_from_origin
from src.floorplan.plan import FloorPlan, sample_uniform
from src.graph.kernels import as_feature_matrix

GAIN_RANGE = (0.5, 2.0)
_MAX_RESAMPLE = 100


def _streams(seed: int) -> List[np.random.SeedSequence]:
    """Independent child seeds: [mixing matrix, locations, gains, resampling]."""
    return np.random.SeedSequence(seed).spawn(4)


@dataclass(frozen=True)
class SynthScenario:
    plan: FloorPlan
    r0: np.ndarray
    B: np.ndarray  # (p, 2)
    M: int
    nuisance: bool = False
    seed: int = 0
    gain_range: Tuple[float, float] = GAIN_RANGE

    def __post_init__(self):
        r0 = np.asarray(self.r0, dtype=float).reshape(2)
        b = np.asarray(self.B, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2:
            raise ParameterError(f"mixing matrix B must be p x 2, got shape {b.shape}")
        if b.shape[0] < 2:
            raise ParameterError(f"signal dimension p must be at least 2, got {b.shape[0]}")
        if np.linalg.matrix_rank(b) < 2:
            raise ParameterError("mixing matrix B must have full column rank")
        if self.M < 1:
            raise ParameterError(f"device count M must be positive, got {self.M}")
        lo, hi = self.gain_range
        if not 0 < lo <= hi:
            raise ParameterError(f"gain range must satisfy 0 < low <= high, got {self.gain_range}")
        r0.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "r0", r0)
        object.__setattr__(self, "B", b)

    @property
    def p(self) -> int:
        return self.B.shape[0]

    @classmethod
    def random(cls, plan: FloorPlan, r0, p: int, M: int, seed: int = 0, nuisance: bool = False) -> "SynthScenario":
        """Scenario with B drawn i.i.d. standard normal from ``seed``."""
        rng = np.random.default_rng(_streams(seed)[0])
        return cls(plan=plan, r0=r0, B=rng.standard_normal((p, 2)), M=M, nuisance=nuisance, seed=seed)

    def gains(self) -> np.ndarray:
        """theta_i, log-uniform on the gain range; all ones when the nuisance is off."""
        if not self.nuisance:
            return np.ones(self.M)
        lo, hi = self.gain_range
        rng = np.random.default_rng(_streams(self.seed)[2])
        return np.exp(rng.uniform(np.log(lo), np.log(hi), self.M))

    def to_dict(self) -> dict:
        return {
            "r0": self.r0.tolist(),
            "B": self.B.tolist(),
            "p": self.p,
            "M": int(self.M),
            "nuisance": bool(self.nuisance),
            "gain_range": list(self.gain_range),
            "seed": int(self.seed),
            "plan": self.plan.to_dict(),
        }


def radial_signals(locations: np.ndarray, r0, B: np.ndarray, gains: Optional[np.ndarray] = None,
                   distances: Optional[np.ndarray] = None) -> np.ndarray:
    """theta_i * B x_i / d_i^2, with d_i the Euclidean distance to r0 unless given."""
    x = np.asarray(locations, dtype=float).reshape(-1, 2)
    if distances is None:
        distances = np.linalg.norm(x - np.asarray(r0, dtype=float).reshape(1, 2), axis=1)
    signals = (x @ np.asarray(B, dtype=float).T) / (distances ** 2)[:, None]
    if gains is not None:
        signals = signals * np.asarray(gains, dtype=float)[:, None]
    return signals


def _locations(scenario: SynthScenario) -> np.ndarray:
    """Uniform device positions; any draw landing exactly on r0 is redrawn."""
    streams = _streams(scenario.seed)
    loc_seed = int(streams[1].generate_state(1)[0])
    x = np.array(sample_uniform(scenario.plan, scenario.M, loc_seed).points)
    redraw = np.random.default_rng(streams[3])
    for _ in range(_MAX_RESAMPLE):
        bad = np.flatnonzero(np.all(x == scenario.r0, axis=1))
        if bad.size == 0:
            return x
        seed = int(redraw.integers(0, 2 ** 32))
        x[bad] = sample_uniform(scenario.plan, bad.size, seed).points
    raise ParameterError("could not draw device positions away from r0")


def generate_radial(scenario: SynthScenario) -> Tuple[np.ndarray, np.ndarray]:
    """
    Devices uniform over the plan, signals from the Euclidean inverse-square model.

    Returns:
        (locations M x 2, signals M x p)
    """
    if scenario.plan.contains_xy(scenario.r0[:1], scenario.r0[1:])[0]:
        raise ParameterError("the radial model places r0 outside the floor plan")
    x = _locations(scenario)
    return x, radial_signals(x, scenario.r0, scenario.B, scenario.gains())


def generate_geodesic(scenario: SynthScenario, resolution: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Same devices as generate_radial, with the in-plan geodesic distance to r0.

    Walls make the decay discontinuous: a point just behind a wall is reached
    only around it, so its signal is weaker than the Euclidean model predicts.
    """
    if not scenario.plan.walls:
        warnings.warn("floor plan has no walls; the geodesic model reduces to the radial one")
    x = _locations(scenario)
    dist = geodesic_from_origin(scenario.plan, x, scenario.r0, resolution)
    unreachable = np.flatnonzero(~np.isfinite(dist))
    if unreachable.size:
        raise InfiniteGeodesicError(
            f"device {int(unreachable[0])} is not reachable from r0 inside the floor plan"
        )
    return x, radial_signals(x, scenario.r0, scenario.B, scenario.gains(), distances=dist)


def _canonical_order(locations: np.ndarray, signals: np.ndarray) -> np.ndarray:
    """Order raw records by (x, y, features) so the corpus order does not matter."""
    feats = as_feature_matrix(signals)
    keys = tuple(feats.T[::-1]) + (locations[:, 1], locations[:, 0])
    return np.lexsort(keys)


def build_signal_sets(
    raw_locations: Sequence,
    raw_signals: Sequence,
    M: int,
    K: int = 80,
    radius: float = 1.0,
    seed: int = 0,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Group a dense raw corpus into M signal sets.

    M centers are drawn from the raw locations; each set stacks the K raw signals
    whose locations are closest to its center, all within ``radius``. Ties in
    distance go to the canonical order of the raw corpus.

    Args:
        raw_locations: (R, 2) positions of the raw signals.
        raw_signals: (R, p) raw signals, real or complex.
        M: number of sets.
        K: signals per set.
        radius: meters.
        seed: center selection seed.

    Returns:
        (centers M x 2, list of M arrays K x p)
    """
    loc = np.asarray(raw_locations, dtype=float).reshape(-1, 2)
    sig = np.asarray(raw_signals)
    if sig.ndim == 1:
        sig = sig.reshape(-1, 1)
    if len(sig) != len(loc):
        raise ParameterError(f"{len(loc)} raw locations but {len(sig)} raw signals")
    if not 1 <= M <= len(loc):
        raise ParameterError(f"M must lie in [1, {len(loc)}], got {M}")
    if K < 1 or radius <= 0:
        raise ParameterError("K must be positive and radius > 0")

    order = _canonical_order(loc, sig)
    loc, sig = loc[order], sig[order]
    rng = np.random.default_rng(seed)
    center_idx = rng.choice(len(loc), size=M, replace=False)
    centers = loc[center_idx]

    tree = cKDTree(loc)
    neighbours = tree.query_ball_point(centers, r=radius)
    sets = []
    for i, (center, members) in enumerate(zip(centers, neighbours)):
        if len(members) < K:
            raise InsufficientDensityError(i, len(members), K, radius)
        members = np.asarray(members, dtype=int)
        dist = np.linalg.norm(loc[members] - center, axis=1)
        chosen = members[np.lexsort((members, dist))[:K]]
        sets.append(sig[chosen])
    return centers, sets


def median_signal(signal_set) -> np.ndarray:
    """Coordinate-wise median of a K x p set (even K averages the two central values)."""
    s = np.atleast_2d(np.asarray(signal_set))
    if np.iscomplexobj(s):
        return np.median(s.real, axis=0) + 1j * np.median(s.imag, axis=0)
    return np.median(s.astype(float), axis=0)


def median_signals(signal_sets: Sequence) -> np.ndarray:
    return np.vstack([median_signal(s) for s in signal_sets])
