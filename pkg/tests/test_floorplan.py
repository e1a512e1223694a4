import numpy as np
import pytest
from scipy.spatial.distance import cdist

from src.errors import EmptyRegionError, FloorPlanError, ParameterError
from src.floorplan.geodesic import build_occupancy_grid, geodesic_distances, geodesic_from_origin
from src.floorplan.plan import (
    FloorPlan,
    load_floorplan,
    sample_uniform,
    sample_with_anchors,
    save_floorplan,
    square_with_hole,
    walled_square,
)


def test_uniform_sample_inside_and_reproducible(square):
    a = sample_uniform(square, 500, seed=7)
    b = sample_uniform(square, 500, seed=7)
    assert a.points.shape == (500, 2)
    assert np.array_equal(a.points, b.points)
    assert square.contains_xy(a.points[:, 0], a.points[:, 1]).all()
    assert not np.array_equal(a.points, sample_uniform(square, 500, seed=8).points)


def test_sample_avoids_holes():
    plan = square_with_hole(1.0, 0.25)
    pts = sample_uniform(plan, 2000, seed=0).points
    in_hole = (np.abs(pts[:, 0] - 0.5) < 0.25) & (np.abs(pts[:, 1] - 0.5) < 0.25)
    assert not in_hole.any()


def test_sample_is_roughly_uniform(square):
    pts = sample_uniform(square, 4000, seed=3).points
    left = np.mean(pts[:, 0] < 0.5)
    assert 0.45 < left < 0.55


def test_zero_area_plan_is_empty_region():
    flat = FloorPlan(((0.0, 0.0), (1.0, 0.0), (2.0, 0.0)))
    with pytest.raises(EmptyRegionError, match="empty region"):
        sample_uniform(flat, 10, seed=0)


def test_invalid_plans_rejected():
    with pytest.raises(FloorPlanError):
        FloorPlan(((0, 0), (2, 0), (2, 2), (0, 2), (3, 1)))
    with pytest.raises(FloorPlanError):
        FloorPlan(((0, 0), (1, 0), (1, 1), (0, 1)), holes=(((2, 2), (3, 2), (3, 3)),))
    with pytest.raises(FloorPlanError):
        FloorPlan(((0, 0), (1, 0), (1, 1), (0, 1)), walls=(((0.5, 0.5), (1.5, 0.5)),))


def test_sample_with_anchors_puts_anchors_first(square):
    anchors = np.array([[0.1, 0.2], [0.3, 0.4], [0.9, 0.9]])
    sample = sample_with_anchors(square, anchors, 50, seed=1)
    assert len(sample) == 50
    assert sample.n_fixed == 3
    assert np.array_equal(sample.points[:3], anchors)
    with pytest.raises(ParameterError):
        sample_with_anchors(square, anchors, 2, seed=1)


def test_floorplan_file_round_trip(tmp_path, walled):
    path = save_floorplan(walled, tmp_path / "plan.json")
    assert load_floorplan(path) == walled


def test_floorplan_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"outer": [[0, 0], [1, 0]', encoding="utf-8")
    with pytest.raises(FloorPlanError, match="line"):
        load_floorplan(bad)
    with pytest.raises(FloorPlanError):
        load_floorplan(tmp_path / "missing.json")


def test_geodesic_open_square_close_to_euclidean(square):
    pts = sample_uniform(square, 40, seed=2).points
    dist = geodesic_distances(square, pts, resolution=0.02)
    euclid = cdist(pts, pts)
    assert np.array_equal(dist, dist.T)
    assert np.all(np.diag(dist) == 0)
    assert np.all(dist >= euclid - 1e-12)
    assert np.all(dist <= 1.1 * euclid + 0.08)


def test_geodesic_goes_around_wall(walled):
    pts = np.array([[0.25, 0.1], [0.75, 0.1]])
    dist = geodesic_distances(walled, pts, resolution=0.01)
    around = 2 * np.hypot(0.25, 0.7)
    assert dist[0, 1] > 0.95 * around
    assert dist[0, 1] < 1.25 * around
    assert dist[0, 1] > 2.5 * 0.5


def test_disconnected_parts_are_infinitely_far():
    split = FloorPlan(((0, 0), (1, 0), (1, 1), (0, 1)), walls=(((0.5, 0.0), (0.5, 1.0)),))
    dist = geodesic_distances(split, [[0.2, 0.5], [0.3, 0.5], [0.8, 0.5]], resolution=0.02)
    assert np.isfinite(dist[0, 1])
    assert np.isinf(dist[0, 2]) and np.isinf(dist[2, 1])


def test_wall_cells_are_blocked(walled):
    grid = build_occupancy_grid(walled, resolution=0.05)
    centers = grid.centers(np.arange(grid.free.size))
    near_wall = (np.abs(centers[:, 0] - 0.5) < 0.03) & (centers[:, 1] > 0.05) & (centers[:, 1] < 0.75)
    assert not grid.free.ravel()[near_wall].any()


def test_geodesic_from_origin_matches_pairwise(square):
    pts = np.array([[0.9, 0.9], [0.5, 0.1], [0.1, 0.8]])
    row = geodesic_from_origin(square, pts, (0.1, 0.1), resolution=0.02)
    euclid = np.linalg.norm(pts - [0.1, 0.1], axis=1)
    assert np.all(row >= euclid - 1e-12)
    assert np.all(row <= 1.1 * euclid + 0.05)


def test_snap_stays_on_the_same_side_of_a_wall():
    plan = walled_square(1.0, 0.2, wall_x=0.548)
    grid = build_occupancy_grid(plan, resolution=0.05)
    # nearest free cell center is (0.575, 0.325), behind the wall
    point = np.array([[0.545, 0.31]])
    cell = grid.snap(point)
    assert grid.centers(cell)[0, 0] < 0.548
    dist = geodesic_distances(plan, [[0.545, 0.31], [0.56, 0.31]], resolution=0.05)
    assert dist[0, 1] > 0.9


def test_snap_without_walls_is_nearest_cell(square):
    grid = build_occupancy_grid(square, resolution=0.1)
    cell = grid.snap(np.array([[0.33, 0.71]]))
    assert np.allclose(grid.centers(cell), [[0.35, 0.75]])


def test_geodesic_triangle_inequality(walled):
    pts = sample_uniform(walled, 30, seed=5).points
    dist = geodesic_distances(walled, pts, resolution=0.02)
    through = dist[:, :, None] + dist[None, :, :]
    assert np.all(dist[:, None, :] <= through + 1e-9)


def test_geodesic_converges_as_grid_refines(walled):
    pts = np.array([[0.25, 0.1], [0.75, 0.1], [0.3, 0.6]])
    oracle = geodesic_distances(walled, pts, resolution=0.005)
    errors = [np.abs(geodesic_distances(walled, pts, resolution=r) - oracle).max() for r in (0.1, 0.02)]
    assert errors[1] < errors[0]
    assert errors[1] < 0.1 * oracle[0, 1]


def test_geodesic_agrees_with_exact_path_around_wall_tip(walled):
    # the shortest path bends once, at the top of the wall (0.5, 0.8)
    pts = np.array([[0.25, 0.1], [0.75, 0.1]])
    exact = 2 * np.hypot(0.25, 0.7)
    dist = geodesic_distances(walled, pts, resolution=0.005)[0, 1]
    # 8-connected steps overestimate straight legs by at most 1 / cos(22.5 deg)
    assert exact - 0.01 <= dist <= 1.0824 * exact + 0.05
