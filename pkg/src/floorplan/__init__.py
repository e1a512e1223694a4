from src.floorplan.plan import (
    AreaSample,
    FloorPlan,
    load_floorplan,
    sample_uniform,
    sample_with_anchors,
    save_floorplan,
    square_with_hole,
    unit_square,
    walled_square,
)
from src.floorplan.geodesic import build_occupancy_grid, geodesic_distances, geodesic_from_origin

__all__ = [
    "AreaSample",
    "FloorPlan",
    "build_occupancy_grid",
    "geodesic_distances",
    "geodesic_from_origin",
    "load_floorplan",
    "sample_uniform",
    "sample_with_anchors",
    "save_floorplan",
    "square_with_hole",
    "unit_square",
    "walled_square",
]
