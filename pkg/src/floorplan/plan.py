"""
Venue geometry: the floor plan region, its walls, and uniform sampling over it.
"""
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import shapely
from pydantic import BaseModel, ValidationError
from shapely.geometry import LinearRing, LineString, MultiLineString, Polygon

from config.manager import settings
from utils.simple_logger import save_log
from src.errors import EmptyRegionError, FloorPlanError, ParameterError

Point2 = Tuple[float, float]

# Tolerance for "wall lies inside the closed region" checks on boundary-touching walls.
_COVER_TOL = 1e-9


class FloorPlanFile(BaseModel):
    """On-disk floor plan: all coordinates in meters."""
    outer: List[Point2]
    holes: List[List[Point2]] = []
    walls: List[Tuple[Point2, Point2]] = []


@dataclass(frozen=True)
class FloorPlan:
    """Polygonal venue with optional holes and zero-thickness interior walls."""

    outer: Tuple[Point2, ...]
    holes: Tuple[Tuple[Point2, ...], ...] = ()
    walls: Tuple[Tuple[Point2, Point2], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "outer", tuple(tuple(map(float, p)) for p in self.outer))
        object.__setattr__(self, "holes", tuple(tuple(tuple(map(float, p)) for p in h) for h in self.holes))
        object.__setattr__(self, "walls", tuple(
            (tuple(map(float, a)), tuple(map(float, b))) for a, b in self.walls
        ))
        self._validate()

    def _validate(self):
        if len(self.outer) < 3:
            raise FloorPlanError("outer polygon needs at least 3 vertices")
        outer_poly = Polygon(self.outer)
        # Zero-area plans are accepted here; sampling reports them as an empty region.
        if outer_poly.area > 0 and not LinearRing(self.outer).is_simple:
            raise FloorPlanError("outer polygon is self-intersecting")

        hole_polys = []
        for i, hole in enumerate(self.holes):
            if len(hole) < 3:
                raise FloorPlanError(f"hole {i} needs at least 3 vertices")
            poly = Polygon(hole)
            if not outer_poly.contains(poly):
                raise FloorPlanError(f"hole {i} is not inside the outer polygon")
            for j, other in enumerate(hole_polys):
                if poly.intersects(other):
                    raise FloorPlanError(f"holes {j} and {i} overlap")
            hole_polys.append(poly)

        if self.walls and self.region.area > 0:
            closed = self.region.buffer(_COVER_TOL)
            for i, wall in enumerate(self.walls):
                if not closed.covers(LineString(wall)):
                    raise FloorPlanError(f"wall {i} leaves the floor plan region")

    @cached_property
    def region(self) -> Polygon:
        return Polygon(self.outer, list(self.holes))

    @cached_property
    def wall_lines(self) -> Optional[MultiLineString]:
        if not self.walls:
            return None
        return MultiLineString([list(w) for w in self.walls])

    @property
    def area(self) -> float:
        return float(self.region.area)

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        return self.region.bounds

    @property
    def diagonal(self) -> float:
        minx, miny, maxx, maxy = self.bounds
        return float(np.hypot(maxx - minx, maxy - miny))

    def default_resolution(self) -> float:
        return settings.geometry.default_resolution(self.diagonal)

    def contains_xy(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Strictly inside the region (outside holes) and not on a wall."""
        inside = shapely.contains_xy(self.region, x, y)
        if self.wall_lines is not None:
            inside &= ~shapely.intersects_xy(self.wall_lines, x, y)
        return inside

    def without_walls(self) -> "FloorPlan":
        return FloorPlan(self.outer, self.holes, ())

    def translated(self, dx: float, dy: float) -> "FloorPlan":
        shift = lambda p: (p[0] + dx, p[1] + dy)
        return FloorPlan(
            tuple(map(shift, self.outer)),
            tuple(tuple(map(shift, h)) for h in self.holes),
            tuple((shift(a), shift(b)) for a, b in self.walls),
        )

    def to_dict(self) -> dict:
        return {
            "outer": [list(p) for p in self.outer],
            "holes": [[list(p) for p in h] for h in self.holes],
            "walls": [[list(a), list(b)] for a, b in self.walls],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FloorPlan":
        try:
            parsed = FloorPlanFile.model_validate(data)
        except ValidationError as e:
            raise FloorPlanError(f"invalid floor plan: {e}") from e
        return cls(tuple(parsed.outer), tuple(tuple(h) for h in parsed.holes), tuple(parsed.walls))


@dataclass(frozen=True)
class AreaSample:
    """T sampled positions (meters) and the seed that produced them."""

    points: np.ndarray
    rng_seed: int = 0
    n_fixed: int = field(default=0)  # leading rows pinned to known anchor positions

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if len(pts) < 1:
            raise ParameterError("an area sample needs at least one point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


def load_floorplan(path) -> FloorPlan:
    """Read a floor plan JSON file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise FloorPlanError(f"floor plan file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise FloorPlanError(f"{path} line {e.lineno}: {e.msg}") from e
    return FloorPlan.from_dict(data)


def save_floorplan(plan: FloorPlan, path) -> Path:
    return save_log(path, plan.to_dict())


def unit_square(size: float = 1.0) -> FloorPlan:
    return FloorPlan(((0.0, 0.0), (size, 0.0), (size, size), (0.0, size)))


def square_with_hole(size: float = 1.0, hole_fraction: float = 0.25) -> FloorPlan:
    """Square with a centered square hole covering ``hole_fraction`` of its area."""
    half = size * np.sqrt(hole_fraction) / 2.0
    c = size / 2.0
    hole = ((c - half, c - half), (c + half, c - half), (c + half, c + half), (c - half, c + half))
    return FloorPlan(unit_square(size).outer, (hole,))


def walled_square(size: float = 1.0, gap: float = 0.2, wall_x: Optional[float] = None) -> FloorPlan:
    """Square split by a vertical wall rising from the floor, leaving ``gap`` meters open at the top."""
    x = size / 2.0 if wall_x is None else wall_x
    if not 0 < gap < size:
        raise ParameterError("gap must lie strictly between 0 and the square size")
    return FloorPlan(unit_square(size).outer, (), (((x, 0.0), (x, size - gap)),))


def sample_uniform(plan: FloorPlan, count: int, seed: int) -> AreaSample:
    """
    Draw ``count`` i.i.d. uniform points over the floor plan by rejection from its bounding box.

    Args:
        plan: the venue.
        count: number of points, at least 1.
        seed: RNG seed; the same seed always gives the same points.

    Returns:
        AreaSample with the accepted points in draw order.
    """
    if count < 1:
        raise ParameterError(f"count must be positive, got {count}")
    area = plan.area
    if not area > 0:
        raise EmptyRegionError()

    minx, miny, maxx, maxy = plan.bounds
    ratio = (maxx - minx) * (maxy - miny) / area
    rng = np.random.default_rng(seed)

    blocks: List[np.ndarray] = []
    accepted = 0
    for _ in range(settings.geometry.max_rejection_rounds):
        need = count - accepted
        batch = int(np.ceil(need * ratio * 1.1)) + 16
        xs = rng.uniform(minx, maxx, batch)
        ys = rng.uniform(miny, maxy, batch)
        mask = plan.contains_xy(xs, ys)
        blocks.append(np.column_stack([xs[mask], ys[mask]]))
        accepted += int(mask.sum())
        if accepted >= count:
            break
    else:
        raise EmptyRegionError()

    return AreaSample(np.vstack(blocks)[:count], rng_seed=seed)


def sample_with_anchors(plan: FloorPlan, anchor_positions: np.ndarray, total: int, seed: int) -> AreaSample:
    """
    Area sample whose first N rows are the anchors' known positions (y_i = x_i, i <= N);
    the remaining ``total - N`` rows are uniform draws.
    """
    anchors = np.asarray(anchor_positions, dtype=float).reshape(-1, 2)
    n = len(anchors)
    if total < n:
        raise ParameterError(f"area sample size T={total} is smaller than the {n} anchors")
    if total == n:
        return AreaSample(anchors, rng_seed=seed, n_fixed=n)
    rest = sample_uniform(plan, total - n, seed).points
    return AreaSample(np.vstack([anchors, rest]), rng_seed=seed, n_fixed=n)


def as_points(points) -> np.ndarray:
    """Accept an AreaSample or an (n, 2) array-like."""
    if isinstance(points, AreaSample):
        return points.points
    return np.asarray(points, dtype=float).reshape(-1, 2)
