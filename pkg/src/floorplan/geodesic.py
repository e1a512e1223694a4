"""
Wall-aware geodesic distances on an 8-connected occupancy grid.

A cell is free when its center lies inside the region and no wall touches the
cell. Diagonal steps are only allowed when both orthogonal neighbours are free,
so paths cannot squeeze between two blocked cells that meet at a corner.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import shapely
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from shapely.geometry import MultiLineString

from config.manager import settings
from src.errors import EmptyRegionError, ParameterError
from src.floorplan.plan import FloorPlan, as_points
from utils.parallel import stack_rows

_STEPS = ((0, 1), (1, 0), (1, 1), (1, -1))
_SNAP_CANDIDATES = 32


@dataclass(frozen=True)
class OccupancyGrid:
    origin: np.ndarray  # lower-left corner of cell (0, 0)
    resolution: float
    free: np.ndarray  # (ny, nx) bool
    graph: csr_matrix  # adjacency over all ny*nx cells, blocked cells isolated
    walls: Optional[MultiLineString] = None

    @property
    def shape(self):
        return self.free.shape

    def centers(self, flat_index: np.ndarray) -> np.ndarray:
        rows, cols = np.unravel_index(flat_index, self.shape)
        return self.origin + (np.column_stack([cols, rows]) + 0.5) * self.resolution

    def snap(self, points: np.ndarray) -> np.ndarray:
        """
        Flat index of the nearest free cell each point can see.

        Among the nearest candidate cells, the first whose center is reached by
        a straight segment crossing no wall wins; a point that sees none of them
        keeps its nearest cell.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        free_idx = np.flatnonzero(self.free.ravel())
        if free_idx.size == 0:
            raise EmptyRegionError("empty region: no free grid cell at this resolution")
        centers = self.centers(free_idx)
        tree = cKDTree(centers)
        if self.walls is None:
            _, nearest = tree.query(pts, k=1)
            return free_idx[nearest]

        k = min(_SNAP_CANDIDATES, free_idx.size)
        _, cand = tree.query(pts, k=k)
        cand = np.asarray(cand).reshape(len(pts), k)
        segments = np.stack([np.broadcast_to(pts[:, None, :], (len(pts), k, 2)), centers[cand]], axis=2)
        crosses = shapely.intersects(shapely.linestrings(segments.reshape(-1, 2, 2)), self.walls)
        visible = ~crosses.reshape(len(pts), k)
        pick = np.argmax(visible, axis=1)  # 0 when nothing is visible
        return free_idx[cand[np.arange(len(pts)), pick]]


def _blocked_by_walls(plan: FloorPlan, origin: np.ndarray, res: float, shape) -> np.ndarray:
    """Conservative rasterization: every cell a wall segment touches is blocked."""
    ny, nx = shape
    blocked = np.zeros(shape, dtype=bool)
    for a, b in plan.walls:
        seg = shapely.linestrings([a, b])
        lo = np.floor((np.minimum(a, b) - origin) / res).astype(int) - 1
        hi = np.floor((np.maximum(a, b) - origin) / res).astype(int) + 1
        c0, r0 = np.maximum(lo, 0)
        c1, r1 = np.minimum(hi, [nx - 1, ny - 1])
        cols, rows = np.meshgrid(np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
        x0 = origin[0] + cols.ravel() * res
        y0 = origin[1] + rows.ravel() * res
        boxes = shapely.box(x0, y0, x0 + res, y0 + res)
        hit = shapely.intersects(boxes, seg)
        blocked[rows.ravel()[hit], cols.ravel()[hit]] = True
    return blocked


def build_occupancy_grid(plan: FloorPlan, resolution: Optional[float] = None) -> OccupancyGrid:
    """
    Rasterize the floor plan and connect free cells.

    Args:
        plan: the venue.
        resolution: cell size in meters; defaults to the plan's default resolution.

    Returns:
        OccupancyGrid with a symmetric sparse adjacency (step cost res or res*sqrt(2)).
    """
    res = plan.default_resolution() if resolution is None else float(resolution)
    if not res > 0:
        raise ParameterError(f"resolution must be positive, got {resolution}")

    minx, miny, maxx, maxy = plan.bounds
    origin = np.array([minx - res, miny - res])
    nx = int(np.ceil((maxx - minx) / res)) + 2
    ny = int(np.ceil((maxy - miny) / res)) + 2

    cx = origin[0] + (np.arange(nx) + 0.5) * res
    cy = origin[1] + (np.arange(ny) + 0.5) * res
    gx, gy = np.meshgrid(cx, cy)
    free = shapely.contains_xy(plan.region, gx, gy)
    if plan.walls:
        free &= ~_blocked_by_walls(plan, origin, res, (ny, nx))

    index = np.arange(ny * nx).reshape(ny, nx)
    src, dst, cost = [], [], []
    for dr, dc in _STEPS:
        r0, r1 = max(0, -dr), ny - max(0, dr)
        c0, c1 = max(0, -dc), nx - max(0, dc)
        here = free[r0:r1, c0:c1]
        there = free[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        ok = here & there
        if dr and dc:
            ok &= free[r0 + dr:r1 + dr, c0:c1] & free[r0:r1, c0 + dc:c1 + dc]
            step = res * np.sqrt(2.0)
        else:
            step = res
        src.append(index[r0:r1, c0:c1][ok])
        dst.append(index[r0 + dr:r1 + dr, c0 + dc:c1 + dc][ok])
        cost.append(np.full(int(ok.sum()), step))

    src = np.concatenate(src)
    dst = np.concatenate(dst)
    cost = np.concatenate(cost)
    n = ny * nx
    graph = coo_matrix(
        (np.concatenate([cost, cost]), (np.concatenate([src, dst]), np.concatenate([dst, src]))),
        shape=(n, n),
    ).tocsr()
    free.setflags(write=False)
    return OccupancyGrid(origin=origin, resolution=res, free=free, graph=graph, walls=plan.wall_lines)


def _grid_rows(grid: OccupancyGrid, sources: np.ndarray, targets: np.ndarray):
    def rows(idx: Sequence[int]) -> np.ndarray:
        block = dijkstra(grid.graph, directed=False, indices=sources[list(idx)])
        return np.atleast_2d(block)[:, targets]
    return rows


def geodesic_distances(plan: FloorPlan, points, resolution: Optional[float] = None) -> np.ndarray:
    """
    Pairwise shortest in-plan path lengths between points.

    Args:
        plan: the venue; walls and hole/outer boundaries block paths.
        points: AreaSample or (n, 2) positions inside the region.
        resolution: grid cell size in meters (default: plan default resolution).

    Returns:
        (n, n) symmetric matrix with zero diagonal, never below the Euclidean
        distance; +inf between points in disconnected parts of the plan.
    """
    pts = as_points(points)
    grid = build_occupancy_grid(plan, resolution)
    cells = grid.snap(pts)
    uniq, inverse = np.unique(cells, return_inverse=True)

    d_cells = stack_rows(_grid_rows(grid, uniq, uniq), len(uniq), settings.geometry.row_chunk)
    dist = d_cells[np.ix_(inverse, inverse)]
    dist = np.maximum(dist, cdist(pts, pts))
    upper = np.triu(dist, 1)
    dist = upper + upper.T
    return dist


def geodesic_from_origin(plan: FloorPlan, points, origin, resolution: Optional[float] = None) -> np.ndarray:
    """
    Geodesic distance from one origin to every point: the straight leg from the
    origin to its nearest free cell, then the in-plan path from that cell.
    """
    pts = as_points(points)
    origin = np.asarray(origin, dtype=float).reshape(1, 2)
    grid = build_occupancy_grid(plan, resolution)
    cells = grid.snap(pts)
    start = grid.snap(origin)
    row = dijkstra(grid.graph, directed=False, indices=int(start[0]))
    dist = np.asarray(row)[cells] + float(np.linalg.norm(origin - grid.centers(start)))
    return np.maximum(dist, np.linalg.norm(pts - origin, axis=1))
