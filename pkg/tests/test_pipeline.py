import numpy as np
import pytest
from scipy.sparse.linalg import ArpackNoConvergence

from src.calibration import error_metrics, localize_1nn, sweep_lambda
from src.calibration.solver import SharedAnchors
from src.errors import ConfigError, DataError, IllPosedCalibrationError, NumericalError, StageError
from src.floorplan.plan import sample_with_anchors
from src.graph.spectral import embed, normalized_laplacian
from src.pipeline import ExperimentConfig, RunContext, apply_overrides, config_from_dict, load_config
from src.pipeline.experiment import GEODESIC_DEMO_DEFAULTS, AreaConfig, SynthConfig
from src.pipeline.runner import (
    area_graph,
    baseline_estimates,
    choose_anchors,
    cmd_geodesic_demo,
    fit_matching,
    graph_features,
    signal_side,
    synthesize,
)
from utils.simple_logger import load_log


def test_apply_overrides_parses_yaml_scalars():
    data = apply_overrides({"area": {"k": 5}}, ["lam=0.1", "sweep.lambdas=[0.1, 1]", "area.metric=geodesic"])
    assert data["lam"] == 0.1
    assert data["sweep"]["lambdas"] == [0.1, 1]
    assert data["area"] == {"k": 5, "metric": "geodesic"}
    with pytest.raises(ConfigError):
        apply_overrides({"d": 3}, ["d.x=1"])
    with pytest.raises(ConfigError):
        apply_overrides({}, ["=1"])


def test_load_config_resolves_paths(tmp_path, write_config):
    path = write_config({"corpus": "data/c.csv", "output_dir": "out"})
    cfg = load_config(path, ExperimentConfig, ["d=4"])
    assert cfg.d == 4
    assert cfg.corpus == str((tmp_path / "data" / "c.csv").resolve())
    assert cfg.output_dir == str((tmp_path / "out").resolve())


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json", ExperimentConfig)
    broken = tmp_path / "broken.json"
    broken.write_text("{\n  \"d\": 8,\n}", encoding="utf-8")
    with pytest.raises(ConfigError, match="line 3"):
        load_config(broken, ExperimentConfig)
    with pytest.raises(ConfigError, match="ExperimentConfig"):
        config_from_dict({"anchors": {"mode": "nearest"}}, ExperimentConfig, tmp_path)


def test_baseline_takes_most_similar_anchor():
    truth = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    similarity = np.array([
        [1.0, 0.2, 0.9, 0.2],
        [0.3, 1.0, 0.3, 0.1],
        [0.9, 0.1, 1.0, 0.5],
        [0.4, 0.2, 0.4, 1.0],
    ])
    est = baseline_estimates(similarity, truth, np.array([0, 2]))
    # row 3 ties between both anchors; the first anchor wins
    assert np.array_equal(est, [[0.0, 0.0], [0.0, 0.0], [2.0, 0.0], [0.0, 0.0]])


def test_choose_anchors_explicit_and_known_only(tmp_path):
    cfg = config_from_dict({"anchors": {"mode": "explicit", "ids": ["d7", "d2"]}}, ExperimentConfig, tmp_path)
    corpus, _ = synthesize(SynthConfig(M=12, p=4))
    ids = corpus.device_ids
    cfg.anchors.ids = [ids[7], ids[2]]
    assert np.array_equal(choose_anchors(cfg, corpus, 2, 0), [2, 7])

    cfg.anchors.ids = ["nobody"]
    with pytest.raises(ConfigError):
        choose_anchors(cfg, corpus, 1, 0)

    random_cfg = config_from_dict({}, ExperimentConfig, tmp_path)
    picked = choose_anchors(random_cfg, corpus, 5, 3)
    assert len(np.unique(picked)) == 5
    with pytest.raises(DataError):
        choose_anchors(random_cfg, corpus, 12, 0)


def test_run_context_stage_and_failure_marker(tmp_path):
    ctx = RunContext(tmp_path / "out", "run", {"d": 8}, seed=3)
    with pytest.raises(StageError) as info:
        with ctx.stage("calibration"):
            raise IllPosedCalibrationError("singular system")
    err = info.value
    assert err.stage == "calibration" and err.exit_code == 4
    ctx.fail(err)
    failed = load_log(tmp_path / "out" / "FAILED.json")
    assert failed == {"error": "singular system", "error_type": "IllPosedCalibrationError",
                      "exit_code": 4, "stage": "calibration"}
    manifest = load_log(tmp_path / "out" / "manifest.json")
    assert manifest["outputs"] == ["FAILED.json"] and manifest["seed"] == 3


def test_linear_algebra_failure_becomes_numerical_stage_error(tmp_path):
    ctx = RunContext(tmp_path / "out", "run", {}, seed=0)
    with pytest.raises(StageError) as info:
        with ctx.stage("signal_embedding"):
            np.linalg.cholesky(-np.eye(2))
    err = info.value
    assert isinstance(err.cause, NumericalError) and err.exit_code == 4
    assert "LinAlgError" in str(err.cause)
    ctx.fail(err)
    failed = load_log(tmp_path / "out" / "FAILED.json")
    assert failed["stage"] == "signal_embedding" and failed["exit_code"] == 4

    with pytest.raises(StageError) as info:
        with ctx.stage("area_embedding"):
            raise ArpackNoConvergence("no convergence", np.zeros(0), np.zeros((3, 0)))
    assert info.value.exit_code == 4


def test_full_labeling_recovers_anchor_positions(square, tmp_path):
    corpus, _ = synthesize(SynthConfig(M=80, p=10))
    truth = corpus.positions()
    sample = sample_with_anchors(square, truth, 120, seed=1)
    area_emb = embed(normalized_laplacian(area_graph(square, sample, AreaConfig())), 2)
    est = localize_1nn(area_emb.vectors[:80], area_emb, sample)
    assert np.allclose(est, truth)


def test_axis_alignment_keeps_estimates(tmp_path):
    cfg = config_from_dict({"synth": {"M": 150, "p": 20}, "anchors": {"n": 15}}, ExperimentConfig, tmp_path)
    corpus, plan = synthesize(cfg.synth)
    truth = corpus.positions()
    signal = signal_side(graph_features(corpus, cfg.kernel), cfg.kernel, cfg.d)
    anchor_idx = choose_anchors(cfg, corpus, 15, 0)
    aligned = fit_matching(cfg, plan, signal, truth, anchor_idx, 0)
    raw = fit_matching(cfg, plan, signal, truth, anchor_idx, 0, area_cfg=AreaConfig(align_axes=False))
    assert np.array_equal(aligned.estimates, raw.estimates)
    assert np.corrcoef(aligned.area_embedding.vectors[:, 0], aligned.area.points[:, 0])[0, 1] > 0.9


# ---------- desk-scale accuracy (slow) ----------

SEEDS = range(10)


def square_config(tmp_path, seed: int, n: int) -> ExperimentConfig:
    return config_from_dict({
        "seed": seed,
        "synth": {"M": 1000, "p": 20, "r0": [1.5, 0.5], "seed": seed},
        "kernel": {"name": "self_tuning", "k": 10},
        "anchors": {"n": n},
        "d": 8, "l": 2, "lam": 0.01,
    }, ExperimentConfig, tmp_path)


def square_fit(cfg: ExperimentConfig):
    corpus, plan = synthesize(cfg.synth)
    truth = corpus.positions()
    signal = signal_side(graph_features(corpus, cfg.kernel), cfg.kernel, cfg.d)
    anchor_idx = choose_anchors(cfg, corpus, cfg.anchors.n, cfg.seed)
    return plan, truth, signal, anchor_idx, fit_matching(cfg, plan, signal, truth, anchor_idx, cfg.seed)


@pytest.mark.slow
def test_calibrated_coordinates_track_true_coordinates(tmp_path):
    passed = 0
    for seed in SEEDS:
        _, truth, _, _, fit = square_fit(square_config(tmp_path, seed, 10))
        best = [max(abs(np.corrcoef(fit.psi[:, j], truth[:, c])[0, 1]) for c in (0, 1)) for j in range(2)]
        passed += all(r >= 0.9 for r in best)
    assert passed >= 9


@pytest.mark.slow
def test_matching_beats_labeled_baseline(tmp_path):
    passed = 0
    for seed in SEEDS:
        plan, truth, signal, anchor_idx, fit = square_fit(square_config(tmp_path, seed, 20))
        ours = error_metrics(fit.estimates, truth, anchor_idx)["median"]
        base = error_metrics(baseline_estimates(signal.similarity, truth, anchor_idx), truth, anchor_idx)["median"]
        passed += ours <= 0.07 * plan.diagonal and ours < base
    assert passed >= 9


@pytest.mark.slow
def test_loss_selected_lambda_is_near_best(tmp_path):
    grid = [float(v) for v in np.logspace(-4, 0, 7)]
    passed = 0
    for seed in SEEDS:
        cfg = square_config(tmp_path, seed, 20)
        _, truth, signal, anchor_idx, fit = square_fit(cfg)
        result = sweep_lambda(signal.embedding, fit.area_embedding, SharedAnchors.leading(anchor_idx), grid,
                              area_points=fit.area, truth=truth, seed=seed)
        chosen = next(r for r in result.rows if r.lam == result.best_lambda)
        best = min(r.median_error for r in result.rows if r.ok)
        passed += chosen.median_error <= 2 * best
    assert passed >= 8


@pytest.mark.slow
def test_geodesic_area_graph_beats_euclidean_behind_wall(tmp_path):
    passed = 0
    for seed in SEEDS:
        data = dict(GEODESIC_DEMO_DEFAULTS, seed=seed, output_dir=str(tmp_path / f"demo{seed}"))
        data["synth"] = dict(data["synth"], seed=seed)
        bundle = cmd_geodesic_demo(config_from_dict(data, ExperimentConfig, tmp_path))
        passed += bundle["metrics"]["geodesic"]["median"] < bundle["metrics"]["euclidean"]["median"]
    assert passed >= 8
