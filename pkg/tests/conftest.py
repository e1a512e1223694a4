import json
from pathlib import Path

import numpy as np
import pytest

from src.floorplan.plan import unit_square, walled_square
from src.synth.generator import SynthScenario, generate_radial


@pytest.fixture
def square():
    return unit_square()


@pytest.fixture
def walled():
    return walled_square(1.0, 0.2)


@pytest.fixture
def radial_scenario(square):
    return SynthScenario.random(square, (1.5, 0.5), p=20, M=300, seed=0)


@pytest.fixture
def radial_data(radial_scenario):
    """(locations, signals) of the 300-device radial scenario."""
    return generate_radial(radial_scenario)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def experiment_dict(tmp_path):
    """Small in-memory synthetic experiment; fast enough for CLI tests."""
    return {
        "name": "small",
        "output_dir": str(tmp_path / "run"),
        "seed": 0,
        "synth": {"M": 150, "p": 20, "r0": [1.5, 0.5], "seed": 0},
        "anchors": {"n": 10},
        "d": 8,
        "l": 2,
        "lam": 0.01,
        "sweep": {"lambdas": [0.001, 0.01, 0.1], "folds": 2},
        "plots": {"n_grid": [5, 10], "seeds": 1},
    }


@pytest.fixture
def write_config(tmp_path):
    def write(data: dict, name: str = "experiment.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return write
