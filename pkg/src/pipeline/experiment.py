"""
Experiment configuration files.

One JSON file per CLI invocation. Relative paths are resolved against the
directory of the config file, and ``--set a.b=value`` overrides are applied to
the raw JSON before validation (values parsed as YAML scalars, so
``--set lam=0.1`` gives a float and ``--set sweep.lambdas=[0.1,1]`` a list).
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Type, TypeVar

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError

from src.errors import ConfigError
from src.floorplan.plan import FloorPlan, load_floorplan, square_with_hole, unit_square, walled_square
from src.graph.kernels import KernelSpec

DEFAULT_LAMBDAS = [float(v) for v in np.logspace(-4, 0, 7)]
DEFAULT_N_GRID = [5, 10, 20, 40, 80]


class PlanConfig(BaseModel):
    """Floor plan: a JSON file, or one of the built-in shapes."""
    file: Optional[str] = None
    builtin: Literal["unit_square", "square_with_hole", "walled_square"] = "unit_square"
    size: float = 1.0
    gap: float = 0.2  # walled_square: opening left at the top of the wall
    hole_fraction: float = 0.25

    def build(self) -> FloorPlan:
        if self.file:
            return load_floorplan(self.file)
        if self.builtin == "walled_square":
            return walled_square(self.size, self.gap)
        if self.builtin == "square_with_hole":
            return square_with_hole(self.size, self.hole_fraction)
        return unit_square(self.size)


class RawCorpusConfig(BaseModel):
    """Dense raw corpus grouped into signal sets (K nearest raw signals within radius)."""
    count: int = 20000
    K: int = 80
    radius: float = 1.0


class SynthConfig(BaseModel):
    plan: PlanConfig = Field(default_factory=PlanConfig)
    model: Literal["radial", "geodesic"] = "radial"
    r0: Tuple[float, float] = (1.5, 0.5)
    p: int = 20
    M: int = 1000
    nuisance: bool = False
    seed: int = 0
    resolution: Optional[float] = None
    raw: Optional[RawCorpusConfig] = None
    output: str = "corpus.csv"


class IngestConfig(BaseModel):
    path: str
    output: str = "corpus.csv"
    floor: Optional[int] = None
    building: Optional[int] = None
    missing_sentinel: Optional[float] = None  # None -> settings.ingest
    floor_value: Optional[float] = None
    min_coverage: float = 0.0


class AreaConfig(BaseModel):
    """Area sample and area graph."""
    T: Optional[int] = None  # None -> M
    metric: Literal["euclidean", "geodesic"] = "euclidean"
    resolution: Optional[float] = None
    kernel: Literal["gaussian", "self_tuning"] = "gaussian"
    k: int = 10
    sigma: Optional[float] = None
    align_axes: bool = True  # rotate the embedding span onto the x, y axes


class AnchorConfig(BaseModel):
    n: int = 10
    mode: Literal["random", "kmeans", "explicit"] = "random"
    ids: Optional[List[str]] = None  # device ids for explicit mode


class SweepConfig(BaseModel):
    lambdas: List[float] = Field(default_factory=lambda: list(DEFAULT_LAMBDAS))
    d_grid: Optional[List[int]] = None
    l_grid: Optional[List[int]] = None
    folds: int = 5


class PlotConfig(BaseModel):
    enabled: bool = True
    n_grid: List[int] = Field(default_factory=lambda: list(DEFAULT_N_GRID))
    seeds: int = 1
    eigen_columns: int = 2


class ExperimentConfig(BaseModel):
    name: str = "experiment"
    output_dir: str = "runs/experiment"
    seed: int = 0

    corpus: Optional[str] = None
    synth: Optional[SynthConfig] = None
    plan: PlanConfig = Field(default_factory=PlanConfig)

    kernel: KernelSpec = Field(default_factory=KernelSpec)
    area: AreaConfig = Field(default_factory=AreaConfig)
    anchors: AnchorConfig = Field(default_factory=AnchorConfig)
    d: int = 8
    l: int = 2
    lam: float = 0.01
    explicit_regularizer: bool = False

    sweep: SweepConfig = Field(default_factory=SweepConfig)
    plots: PlotConfig = Field(default_factory=PlotConfig)
    save_graphs: bool = False


ConfigT = TypeVar("ConfigT", bound=BaseModel)


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply ``a.b.c=value`` overrides in place; value parsed as YAML."""
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override {item!r} has an empty key")
        node = data
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"override {item!r}: {part} is not a section")
            node = child
        try:
            node[parts[-1]] = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError(f"override {item!r}: cannot parse value: {e}") from e
    return data


def _resolve(base: Path, value: Optional[str]) -> Optional[str]:
    if not value:
        return value
    p = Path(value)
    return str(p if p.is_absolute() else (base / p).resolve())


def _read_json(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} line {e.lineno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def load_config(path, model: Type[ConfigT], overrides: Sequence[str] = ()) -> ConfigT:
    """Read, override and validate a config file; paths become absolute."""
    path = Path(path)
    data = apply_overrides(_read_json(path), overrides)
    try:
        cfg = model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid {model.__name__} in {path}:\n{e}") from e
    resolve_paths(cfg, path.parent.resolve())
    return cfg


def config_from_dict(data: Dict[str, Any], model: Type[ConfigT], base_dir, overrides: Sequence[str] = ()) -> ConfigT:
    try:
        cfg = model.model_validate(apply_overrides(dict(data), overrides))
    except ValidationError as e:
        raise ConfigError(f"invalid {model.__name__}:\n{e}") from e
    resolve_paths(cfg, Path(base_dir).resolve())
    return cfg


def resolve_paths(cfg: BaseModel, base: Path) -> None:
    if isinstance(cfg, ExperimentConfig):
        cfg.output_dir = _resolve(base, cfg.output_dir)
        cfg.corpus = _resolve(base, cfg.corpus)
        cfg.plan.file = _resolve(base, cfg.plan.file)
        if cfg.synth is not None:
            cfg.synth.plan.file = _resolve(base, cfg.synth.plan.file)
    elif isinstance(cfg, SynthConfig):
        cfg.output = _resolve(base, cfg.output)
        cfg.plan.file = _resolve(base, cfg.plan.file)
    elif isinstance(cfg, IngestConfig):
        cfg.path = _resolve(base, cfg.path)
        cfg.output = _resolve(base, cfg.output)


# Wall experiment used by ``geodesic-demo`` when no config file is given:
# a square split by a wall with a gap at the top, receiver off the left edge.
GEODESIC_DEMO_DEFAULTS: Dict[str, Any] = {
    "name": "geodesic-demo",
    "output_dir": "runs/geodesic-demo",
    "synth": {
        "plan": {"builtin": "walled_square", "size": 1.0, "gap": 0.2},
        "model": "geodesic",
        "r0": [-0.5, 0.25],
        "p": 20,
        "M": 600,
        "resolution": 0.01,
    },
    "kernel": {"name": "self_tuning", "k": 10},
    # the walled square is a U-shaped corridor for a geodesic graph; its first
    # four or five harmonics run along the U, so l must reach the cross-corridor one
    "area": {"T": 600, "resolution": 0.01, "kernel": "self_tuning", "k": 10},
    "anchors": {"n": 30},
    "d": 10,
    "l": 6,
    "plots": {"enabled": False},
}
