import json
from pathlib import Path

import numpy as np
import pandas as pd

from main import main
from src.datasets.corpus import load_corpus
from utils.simple_logger import load_log


def run_dir_of(experiment_dict) -> Path:
    return Path(experiment_dict["output_dir"])


def test_synth_command(tmp_path):
    out = tmp_path / "corpus.csv"
    assert main(["synth", "--set", "M=60", "--set", "p=6", "--output", str(out)]) == 0
    corpus = load_corpus(out)
    assert len(corpus) == 60 and corpus.feature_shape == (6,)
    assert corpus.manifest["generator"] == "radial"
    assert (tmp_path / "corpus.floorplan.json").exists()


def test_synth_raw_corpus_mode(tmp_path, write_config):
    cfg = write_config({"M": 20, "p": 4, "raw": {"count": 3000, "K": 10, "radius": 0.2}, "output": "sets.csv"},
                       name="synth.json")
    assert main(["synth", str(cfg)]) == 0
    corpus = load_corpus(tmp_path / "sets.csv")
    assert corpus.is_set_corpus and corpus.feature_shape == (10, 4)


def test_run_writes_artifacts(experiment_dict, write_config):
    assert main(["run", str(write_config(experiment_dict))]) == 0
    out = run_dir_of(experiment_dict)
    for name in ("estimates.csv", "metrics.json", "manifest.json", "model.json", "run.json",
                 "signal_embedding.csv", "area_embedding.csv", "area_points.csv",
                 "plots/error_vs_n.csv", "plots/eigenvectors.csv"):
        assert (out / name).exists(), name
    assert not (out / "FAILED.json").exists()

    est = pd.read_csv(out / "estimates.csv")
    assert len(est) == 150 and est["anchor"].sum() == 10
    metrics = load_log(out / "metrics.json")
    assert metrics["metrics"]["count"] == 140
    assert metrics["params"]["T"] == 150
    manifest = load_log(out / "manifest.json")
    assert manifest["command"] == "run" and "estimates.csv" in manifest["outputs"]

    curve = pd.read_csv(out / "plots/error_vs_n.csv")
    assert set(curve["method"]) == {"manifold_matching", "labeled_1nn"}
    assert sorted(set(curve["N"])) == [5, 10]


def test_error_falls_as_anchor_count_grows(experiment_dict, write_config):
    data = dict(experiment_dict, synth=dict(experiment_dict["synth"], M=300),
                plots={"n_grid": [5, 60], "seeds": 3})
    assert main(["run", str(write_config(data))]) == 0
    curve = pd.read_csv(run_dir_of(experiment_dict) / "plots/error_vs_n.csv")
    per_n = curve.groupby(["method", "N"])["median_error"].mean()
    for method in ("manifold_matching", "labeled_1nn"):
        assert per_n[(method, 60)] < per_n[(method, 5)]


def test_run_is_deterministic(experiment_dict, write_config, tmp_path):
    first = dict(experiment_dict, output_dir=str(tmp_path / "a"))
    second = dict(experiment_dict, output_dir=str(tmp_path / "b"))
    assert main(["run", str(write_config(first, "a.json"))]) == 0
    assert main(["run", str(write_config(second, "b.json"))]) == 0
    assert (tmp_path / "a" / "metrics.json").read_bytes() == (tmp_path / "b" / "metrics.json").read_bytes()


def test_baseline_command(experiment_dict, write_config):
    assert main(["baseline", str(write_config(experiment_dict))]) == 0
    metrics = load_log(run_dir_of(experiment_dict) / "baseline_metrics.json")
    assert metrics["metrics"]["count"] == 140


def test_sweep_command(experiment_dict, write_config):
    assert main(["sweep", str(write_config(experiment_dict)), "--set", "sweep.d_grid=[4,8]"]) == 0
    result = load_log(run_dir_of(experiment_dict) / "sweep.json")
    assert result["best_lambda"] in (0.001, 0.01, 0.1)
    assert result["best_d"] in (4, 8)
    assert len(result["rows"]) == 6


def test_l_grid_is_refused(experiment_dict, write_config):
    assert main(["sweep", str(write_config(experiment_dict)), "--set", "sweep.l_grid=[2,3]"]) == 2


def test_too_many_anchors_is_config_error(experiment_dict, write_config):
    experiment_dict["anchors"] = {"n": 150}
    assert main(["run", str(write_config(experiment_dict))]) == 2
    failed = load_log(run_dir_of(experiment_dict) / "FAILED.json")
    assert failed["exit_code"] == 2 and failed["stage"] == "load"


def test_invalid_override_is_config_error(experiment_dict, write_config):
    assert main(["run", str(write_config(experiment_dict)), "--set", "d=abc"]) == 2
    assert main(["run", str(write_config(experiment_dict)), "--set", "novalue"]) == 2


def test_bad_corpus_is_data_error(tmp_path, write_config):
    (tmp_path / "bad.csv").write_text("device_id,x,y,f0,f1\na,0.1,0.1,1,2\na,0.2,0.2,1,2\n", encoding="utf-8")
    cfg = write_config({"corpus": "bad.csv", "output_dir": "out", "plots": {"enabled": False}})
    assert main(["run", str(cfg)]) == 3
    failed = load_log(tmp_path / "out" / "FAILED.json")
    assert failed["stage"] == "load" and "duplicate" in failed["error"]


def test_ill_posed_calibration_is_numerical_error(experiment_dict, write_config):
    experiment_dict.update({"anchors": {"n": 3}, "lam": 0.0})
    assert main(["run", str(write_config(experiment_dict))]) == 4
    out = run_dir_of(experiment_dict)
    failed = load_log(out / "FAILED.json")
    assert failed["stage"] == "calibration" and failed["exit_code"] == 4
    assert (out / "manifest.json").exists()


def test_extend_places_known_signals_at_their_estimates(experiment_dict, write_config):
    assert main(["run", str(write_config(experiment_dict))]) == 0
    out = run_dir_of(experiment_dict)
    assert main(["extend", str(out), str(out / "corpus.csv")]) == 0
    placed = pd.read_csv(out / "extend" / "extended_estimates.csv")
    est = pd.read_csv(out / "estimates.csv")
    assert np.array_equal(placed[["x_hat", "y_hat"]].to_numpy(), est[["x_hat", "y_hat"]].to_numpy())


def test_ingest_command(tmp_path):
    frame = pd.DataFrame({
        "WAP001": [-50, 100, -70], "WAP002": [-60, -65, 100],
        "LONGITUDE": [0.0, 1.0, 2.0], "LATITUDE": [0.0, 1.0, 2.0],
        "FLOOR": [0, 0, 0], "BUILDINGID": [1, 1, 1],
    })
    src = tmp_path / "rssi.csv"
    frame.to_csv(src, index=False)
    out = tmp_path / "corpus.csv"
    assert main(["ingest", str(src), "--output", str(out), "--building", "1"]) == 0
    corpus = load_corpus(out)
    assert len(corpus) == 3
    assert json.loads((tmp_path / "corpus.meta.json").read_text())["format"] == "rssi"
