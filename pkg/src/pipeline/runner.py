"""
CLI command implementations.

cmd_run follows the manifold-matching pipeline end to end:
  1. signal graph and its Laplacian
  2. signal embedding phi_S (d columns)
  3. area sample (anchors' true positions first) and area graph
  4. area embedding phi_A (l columns)
  5. closed-form calibration C, psi = C phi_S
  6. 1-NN localization of psi among the area embedding rows
"""
import hashlib
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy.sparse.linalg import ArpackNoConvergence

from src.calibration.anchors import select_anchors
from src.calibration.localize import extend_many, localize_1nn
from src.calibration.metrics import error_metrics, position_errors
from src.calibration.solver import CalibrationModel, SharedAnchors, calibrate, solve_calibration
from src.calibration.sweep import SweepResult, sweep_grid, sweep_lambda
from src.datasets.artifacts import (
    FLOAT_FORMAT,
    load_model,
    save_embedding,
    save_graph,
    save_model,
    save_points,
)
from src.datasets.corpus import SignalCorpus, load_corpus, save_corpus
from src.datasets.rssi import ingest_rssi_dataset, receiver_coverage
from src.errors import ConfigError, DataError, LocalizationError, NumericalError, StageError
from src.floorplan.geodesic import geodesic_distances
from src.floorplan.plan import AreaSample, FloorPlan, sample_with_anchors, save_floorplan
from src.graph.kernels import (
    FeatureInput,
    KernelSpec,
    WeightedGraph,
    build_signal_graph,
    knn_bandwidth,
    normalized_gaussian,
    self_tuning_gaussian,
)
from src.graph.spectral import Embedding, Laplacian, align_to_coordinates, embed, normalized_laplacian
from src.pipeline.experiment import AreaConfig, ExperimentConfig, IngestConfig, SynthConfig
from src.synth.generator import (
    SynthScenario,
    build_signal_sets,
    generate_geodesic,
    generate_radial,
    median_signals,
)
from utils.config_checker import ConfigChecker
from utils.pretty_print import echo, error_vs_n_table, metrics_table, show, sweep_table
from utils.simple_logger import load_log, save_log


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class RunContext:
    """Output directory bookkeeping: stage wrapping, the manifest and the failure marker."""

    def __init__(self, out_dir, command: str, config: Optional[dict] = None, seed: Optional[int] = None):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = config or {}
        self.seed = seed
        self.inputs: Dict[str, str] = {}
        self.outputs: List[str] = []

    def path(self, name: str) -> Path:
        """Path of an output file; registers it in the manifest."""
        if name not in self.outputs:
            self.outputs.append(name)
        target = self.out_dir / name
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def add_input(self, path) -> None:
        if path:
            p = Path(path)
            if p.exists():
                self.inputs[p.name] = _sha256(p)

    @contextmanager
    def stage(self, name: str):
        echo(f"🔧 {name}")
        try:
            yield
        except StageError:
            raise
        except LocalizationError as e:
            raise StageError(name, e) from e
        except ValidationError as e:
            raise StageError(name, ConfigError(str(e))) from e
        except (ValueError, ArithmeticError, ArpackNoConvergence) as e:
            # LinAlgError is a ValueError; numerical failures from numpy/scipy exit with code 4
            raise StageError(name, NumericalError(f"{type(e).__name__}: {e}")) from e

    def write_manifest(self) -> Path:
        return save_log(self.out_dir / "manifest.json", {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": sorted(self.outputs),
            "seed": self.seed,
        })

    def fail(self, err: StageError) -> None:
        echo(f"❌ stage '{err.stage}' failed: {err.cause}")
        save_log(self.path("FAILED.json"), {
            "stage": err.stage,
            "error": str(err.cause),
            "error_type": type(err.cause).__name__,
            "exit_code": err.exit_code,
        })
        self.write_manifest()


# ---------- data preparation ----------

def synthesize(cfg: SynthConfig) -> Tuple[SignalCorpus, FloorPlan]:
    """Generate a synthetic corpus (vector signals, or signal sets in raw-corpus mode)."""
    plan = cfg.plan.build()
    count = cfg.raw.count if cfg.raw else cfg.M
    scenario = SynthScenario.random(plan, cfg.r0, cfg.p, count, seed=cfg.seed, nuisance=cfg.nuisance)
    if cfg.model == "geodesic":
        locations, signals = generate_geodesic(scenario, cfg.resolution)
    else:
        locations, signals = generate_radial(scenario)

    manifest = {"generator": cfg.model, "scenario": scenario.to_dict(), "resolution": cfg.resolution}
    if cfg.raw:
        centers, sets = build_signal_sets(locations, signals, cfg.M, cfg.raw.K, cfg.raw.radius, cfg.seed)
        manifest["raw"] = cfg.raw.model_dump()
        return SignalCorpus.from_arrays(sets, centers, manifest=manifest), plan
    return SignalCorpus.from_arrays(signals, locations, manifest=manifest), plan


def load_inputs(cfg: ExperimentConfig, ctx: RunContext) -> Tuple[SignalCorpus, FloorPlan]:
    if cfg.synth is not None:
        corpus, plan = synthesize(cfg.synth)
        save_corpus(corpus, ctx.path("corpus.csv"))
        ctx.outputs.append("corpus.meta.json")
    else:
        corpus = load_corpus(cfg.corpus)
        plan = cfg.plan.build()
        ctx.add_input(cfg.corpus)
        ctx.add_input(cfg.plan.file)
    save_floorplan(plan, ctx.path("floorplan.json"))
    return corpus, plan


def graph_features(corpus: SignalCorpus, kernel: KernelSpec) -> FeatureInput:
    """Signal sets for the trace-projection kernel, median signals (or raw vectors) otherwise."""
    if kernel.name == "trace_projection":
        return corpus.signal_sets()
    if corpus.is_set_corpus:
        return median_signals(corpus.signal_sets())
    return corpus.features()


def vector_features(corpus: SignalCorpus) -> np.ndarray:
    if corpus.is_set_corpus:
        return median_signals(corpus.signal_sets())
    return corpus.features()


def choose_anchors(cfg: ExperimentConfig, corpus: SignalCorpus, n: int, seed: int) -> np.ndarray:
    """Anchor signal indices, drawn among devices with known positions."""
    truth = corpus.positions()
    known = np.flatnonzero(np.all(np.isfinite(truth), axis=1))
    if cfg.anchors.mode == "explicit":
        index = {dev: i for i, dev in enumerate(corpus.device_ids)}
        unknown = [dev for dev in cfg.anchors.ids or [] if dev not in index]
        if unknown:
            raise ConfigError(f"explicit anchors not in the corpus: {unknown[:5]}")
        ids = np.asarray([index[dev] for dev in cfg.anchors.ids], dtype=int)
        if not np.all(np.isin(ids, known)):
            raise DataError("explicit anchors must have known positions")
        return select_anchors(len(ids), len(corpus), "explicit", explicit=ids)
    if len(known) <= n:
        raise DataError(f"only {len(known)} devices have known positions; {n} anchors requested")
    feats = vector_features(corpus)[known] if cfg.anchors.mode == "kmeans" else None
    return known[select_anchors(n, len(known), cfg.anchors.mode, seed=seed, features=feats)]


@dataclass
class SignalSide:
    graph: WeightedGraph
    similarity: np.ndarray
    laplacian: Laplacian
    embedding: Embedding


@dataclass
class Fit:
    model: CalibrationModel
    anchors: SharedAnchors
    area: AreaSample
    area_embedding: Embedding
    area_graph: WeightedGraph
    psi: np.ndarray
    estimates: np.ndarray


def signal_side(features: FeatureInput, kernel: KernelSpec, d: int) -> SignalSide:
    graph, similarity = build_signal_graph(features, kernel)
    lap = normalized_laplacian(graph)
    return SignalSide(graph, similarity, lap, embed(lap, d))


def area_graph(plan: FloorPlan, sample: AreaSample, cfg: AreaConfig) -> WeightedGraph:
    """Gaussian graph over the area sample; geodesic distances make walls cut edges."""
    if cfg.metric == "geodesic":
        points, metric = geodesic_distances(plan, sample, cfg.resolution), "precomputed"
    else:
        points, metric = sample.points, "euclidean"
    if cfg.kernel == "self_tuning":
        return self_tuning_gaussian(points, cfg.k, metric)
    sigma = cfg.sigma if cfg.sigma is not None else knn_bandwidth(points, cfg.k, metric)
    return normalized_gaussian(points, sigma, metric)


def area_embedding(plan: FloorPlan, sample: AreaSample, cfg: AreaConfig, l: int) -> Tuple[WeightedGraph, Embedding]:
    graph = area_graph(plan, sample, cfg)
    emb = embed(normalized_laplacian(graph), l)
    if cfg.align_axes:
        emb = align_to_coordinates(emb, sample.points)
    return graph, emb


def fit_matching(
    cfg: ExperimentConfig,
    plan: FloorPlan,
    signal: SignalSide,
    truth: np.ndarray,
    anchor_idx: np.ndarray,
    seed: int,
    ctx: Optional[RunContext] = None,
    area_cfg: Optional[AreaConfig] = None,
) -> Fit:
    """Steps 3 to 6 of the pipeline for one anchor set."""
    area_cfg = area_cfg or cfg.area
    stage = ctx.stage if ctx is not None else _no_stage
    m = len(truth)
    t = area_cfg.T if area_cfg.T is not None else m

    with stage("area-graph"):
        sample = sample_with_anchors(plan, truth[anchor_idx], t, seed + 1)
        graph, area_emb = area_embedding(plan, sample, area_cfg, cfg.l)
    with stage("calibration"):
        anchors = SharedAnchors.leading(anchor_idx)
        model = solve_calibration(signal.embedding, area_emb, anchors, signal.laplacian, cfg.lam,
                                  area_points=sample, explicit=cfg.explicit_regularizer)
    with stage("localization"):
        psi = calibrate(model, signal.embedding)
        estimates = localize_1nn(psi, area_emb, sample)
    return Fit(model, anchors, sample, area_emb, graph, psi, estimates)


@contextmanager
def _no_stage(name: str):
    yield


def baseline_estimates(similarity: np.ndarray, truth: np.ndarray, anchor_idx: np.ndarray) -> np.ndarray:
    """Position of the most similar anchor (first anchor on ties); anchors keep their own position."""
    anchor_idx = np.asarray(anchor_idx, dtype=int)
    best = np.argmax(np.asarray(similarity)[:, anchor_idx], axis=1)
    est = truth[anchor_idx[best]].copy()
    est[anchor_idx] = truth[anchor_idx]
    return est


# ---------- outputs ----------

def write_estimates(path: Path, corpus: SignalCorpus, estimates: np.ndarray, anchor_idx) -> None:
    truth = corpus.positions()
    is_anchor = np.zeros(len(corpus), dtype=bool)
    is_anchor[np.asarray(anchor_idx, dtype=int)] = True
    df = pd.DataFrame({
        "device_id": corpus.device_ids,
        "x_hat": estimates[:, 0],
        "y_hat": estimates[:, 1],
        "x": truth[:, 0],
        "y": truth[:, 1],
        "error": position_errors(estimates, truth),
        "anchor": is_anchor,
    })
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="")


def write_eigenvector_plot(ctx: RunContext, corpus: SignalCorpus, signal: SignalSide, fit: Fit, columns: int):
    truth = corpus.positions()
    c_s = min(columns, signal.embedding.dim)
    c_a = min(columns, fit.area_embedding.dim)
    df = pd.DataFrame({"device_id": corpus.device_ids, "x": truth[:, 0], "y": truth[:, 1]})
    for j in range(c_s):
        df[f"phi_s{j}"] = signal.embedding.vectors[:, j]
    for j in range(c_a):
        df[f"psi{j}"] = fit.psi[:, j]
    df.to_csv(ctx.path("plots/eigenvectors.csv"), index=False, float_format=FLOAT_FORMAT, na_rep="")

    area = pd.DataFrame(fit.area.points, columns=["x", "y"])
    for j in range(c_a):
        area[f"phi_a{j}"] = fit.area_embedding.vectors[:, j]
    area.to_csv(ctx.path("plots/area_eigenvectors.csv"), index=False, float_format=FLOAT_FORMAT)


def error_vs_n(cfg: ExperimentConfig, corpus: SignalCorpus, plan: FloorPlan, signal: SignalSide) -> List[dict]:
    """Median non-anchor error of manifold matching and the labeled-1NN baseline per anchor count."""
    if cfg.anchors.mode == "explicit":
        cfg = cfg.model_copy(update={"anchors": cfg.anchors.model_copy(update={"mode": "random"})})
    truth = corpus.positions()
    known = int(np.all(np.isfinite(truth), axis=1).sum())
    rows = []
    for n in cfg.plots.n_grid:
        if n >= known:
            echo(f"⚠️  skipping N={n}: only {known} devices have known positions")
            continue
        for s in range(cfg.plots.seeds):
            seed = cfg.seed + s
            anchor_idx = choose_anchors(cfg, corpus, n, seed)
            base = baseline_estimates(signal.similarity, truth, anchor_idx)
            rows.append({"N": n, "seed": seed, "method": "labeled_1nn",
                         "median_error": error_metrics(base, truth, anchor_idx)["median"], "error": ""})
            try:
                fit = fit_matching(cfg, plan, signal, truth, anchor_idx, seed)
                med, err = error_metrics(fit.estimates, truth, anchor_idx)["median"], ""
            except LocalizationError as e:
                med, err = None, str(e)
            rows.append({"N": n, "seed": seed, "method": "manifold_matching", "median_error": med, "error": err})
    return rows


def _params(cfg: ExperimentConfig, corpus: SignalCorpus, n: int) -> dict:
    return {
        "M": len(corpus),
        "N": int(n),
        "T": cfg.area.T if cfg.area.T is not None else len(corpus),
        "d": cfg.d,
        "l": cfg.l,
        "lambda": cfg.lam,
        "kernel": cfg.kernel.name,
        "area_metric": cfg.area.metric,
        "anchor_mode": cfg.anchors.mode,
        "seed": cfg.seed,
    }


def _context(cfg: ExperimentConfig, command: str, out_dir=None) -> RunContext:
    return RunContext(out_dir or cfg.output_dir, command, cfg.model_dump(mode="json"), cfg.seed)


def _prepare(cfg: ExperimentConfig, ctx: RunContext):
    checker = ConfigChecker(cfg)
    with ctx.stage("config"):
        checker.run_all_checks()
    with ctx.stage("load"):
        corpus, plan = load_inputs(cfg, ctx)
        ok, error = checker.check_anchor_count(len(corpus))
        if not ok:
            raise ConfigError(error)
    with ctx.stage("anchors"):
        n = len(cfg.anchors.ids or []) if cfg.anchors.mode == "explicit" else cfg.anchors.n
        anchor_idx = choose_anchors(cfg, corpus, n, cfg.seed)
    return corpus, plan, anchor_idx


# ---------- commands ----------

def cmd_run(cfg: ExperimentConfig) -> dict:
    """
    Run the full pipeline and write its artifacts.

    Returns:
        Result bundle: metrics, parameters and the output directory.
    """
    ctx = _context(cfg, "run")
    echo(f"🚀 run '{cfg.name}' -> {ctx.out_dir}")
    try:
        corpus, plan, anchor_idx = _prepare(cfg, ctx)
        truth = corpus.positions()
        with ctx.stage("signal-graph"):
            signal = signal_side(graph_features(corpus, cfg.kernel), cfg.kernel, cfg.d)
        fit = fit_matching(cfg, plan, signal, truth, anchor_idx, cfg.seed, ctx)

        with ctx.stage("artifacts"):
            write_estimates(ctx.path("estimates.csv"), corpus, fit.estimates, anchor_idx)
            save_embedding(signal.embedding, ctx.path("signal_embedding.csv"), corpus.device_ids)
            save_embedding(fit.area_embedding, ctx.path("area_embedding.csv"))
            save_points(fit.area.points, ctx.path("area_points.csv"))
            ctx.outputs += ["signal_embedding.meta.json", "area_embedding.meta.json"]
            save_model(fit.model, ctx.path("model.json"), "area_embedding.csv", "area_points.csv",
                       "signal_embedding.csv")
            if cfg.save_graphs:
                save_graph(signal.graph, ctx.path("signal_graph.csv"))
                save_graph(fit.area_graph, ctx.path("area_graph.csv"))
                ctx.outputs += ["signal_graph.meta.json", "area_graph.meta.json"]
            corpus_file = cfg.corpus if cfg.corpus else "corpus.csv"
            save_log(ctx.path("run.json"), {
                "corpus": corpus_file,
                "estimates": "estimates.csv",
                "kernel": cfg.kernel.model_dump(mode="json"),
                "model": "model.json",
            })

        metrics = error_metrics(fit.estimates, truth, anchor_idx)
        bundle = {"command": "run", "metrics": metrics, "params": _params(cfg, corpus, len(anchor_idx))}
        save_log(ctx.path("metrics.json"), bundle)

        if cfg.plots.enabled:
            with ctx.stage("plots"):
                write_eigenvector_plot(ctx, corpus, signal, fit, cfg.plots.eigen_columns)
                rows = error_vs_n(cfg, corpus, plan, signal)
                pd.DataFrame(rows, columns=["N", "seed", "method", "median_error", "error"]).to_csv(
                    ctx.path("plots/error_vs_n.csv"), index=False, float_format=FLOAT_FORMAT, na_rep="")
                show(error_vs_n_table(rows), "error vs N")
    except StageError as e:
        ctx.fail(e)
        raise

    ctx.write_manifest()
    show(metrics_table({"manifold_matching": metrics}), f"{cfg.name}: localization error (non-anchors)")
    echo(f"✅ run finished, artifacts in {ctx.out_dir}")
    return {**bundle, "output_dir": str(ctx.out_dir)}


def cmd_baseline_1nn(cfg: ExperimentConfig) -> dict:
    """Labeled-1NN baseline: each signal takes the position of its most similar anchor."""
    ctx = _context(cfg, "baseline")
    echo(f"🚀 baseline '{cfg.name}' -> {ctx.out_dir}")
    try:
        corpus, _, anchor_idx = _prepare(cfg, ctx)
        truth = corpus.positions()
        with ctx.stage("similarity"):
            _, similarity = build_signal_graph(graph_features(corpus, cfg.kernel), cfg.kernel)
            estimates = baseline_estimates(similarity, truth, anchor_idx)
        write_estimates(ctx.path("baseline_estimates.csv"), corpus, estimates, anchor_idx)
        metrics = error_metrics(estimates, truth, anchor_idx)
        bundle = {"command": "baseline", "metrics": metrics, "params": _params(cfg, corpus, len(anchor_idx))}
        save_log(ctx.path("baseline_metrics.json"), bundle)
    except StageError as e:
        ctx.fail(e)
        raise
    ctx.write_manifest()
    show(metrics_table({"labeled_1nn": metrics}), f"{cfg.name}: baseline error (non-anchors)")
    return bundle


def cmd_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Select lambda (and optionally d) by the matching loss; emits the loss and error curves."""
    if cfg.sweep.l_grid:
        raise ConfigError("l cannot be selected by the matching loss (the loss grows with l); remove sweep.l_grid")
    ctx = _context(cfg, "sweep")
    echo(f"🚀 sweep '{cfg.name}' -> {ctx.out_dir}")
    try:
        corpus, plan, anchor_idx = _prepare(cfg, ctx)
        truth = corpus.positions()
        d_max = max(cfg.sweep.d_grid) if cfg.sweep.d_grid else cfg.d
        with ctx.stage("signal-graph"):
            signal = signal_side(graph_features(corpus, cfg.kernel), cfg.kernel, d_max)
        with ctx.stage("area-graph"):
            t = cfg.area.T if cfg.area.T is not None else len(corpus)
            sample = sample_with_anchors(plan, truth[anchor_idx], t, cfg.seed + 1)
            _, area_emb = area_embedding(plan, sample, cfg.area, cfg.l)
        with ctx.stage("sweep"):
            kwargs = dict(area_points=sample, signal_lap=signal.laplacian, truth=truth,
                          folds=cfg.sweep.folds, seed=cfg.seed, explicit=cfg.explicit_regularizer)
            anchors = SharedAnchors.leading(anchor_idx)
            if cfg.sweep.d_grid:
                result = sweep_grid(signal.embedding, area_emb, anchors, cfg.sweep.lambdas, cfg.sweep.d_grid, **kwargs)
            else:
                result = sweep_lambda(signal.embedding, area_emb, anchors, cfg.sweep.lambdas, **kwargs)
        save_log(ctx.path("sweep.json"), result.to_dict())
        pd.DataFrame(result.to_dict()["rows"]).to_csv(ctx.path("plots/sweep.csv"), index=False,
                                                      float_format=FLOAT_FORMAT, na_rep="")
    except StageError as e:
        ctx.fail(e)
        raise
    ctx.write_manifest()
    show(sweep_table(result.rows, result.best_lambda, result.best_d), f"{cfg.name}: sweep")
    echo(f"✅ selected lambda={result.best_lambda:g}, d={result.best_d}")
    return result


def cmd_geodesic_demo(cfg: ExperimentConfig) -> dict:
    """The same data and anchors localized with a Euclidean and with a geodesic area graph."""
    ctx = _context(cfg, "geodesic-demo")
    echo(f"🚀 geodesic demo '{cfg.name}' -> {ctx.out_dir}")
    results = {}
    try:
        corpus, plan, anchor_idx = _prepare(cfg, ctx)
        if not plan.walls:
            echo("⚠️  the floor plan has no walls; both area graphs will agree")
        truth = corpus.positions()
        with ctx.stage("signal-graph"):
            signal = signal_side(graph_features(corpus, cfg.kernel), cfg.kernel, cfg.d)
        for metric in ("euclidean", "geodesic"):
            area_cfg = cfg.area.model_copy(update={"metric": metric})
            fit = fit_matching(cfg, plan, signal, truth, anchor_idx, cfg.seed, ctx, area_cfg)
            write_estimates(ctx.path(f"estimates_{metric}.csv"), corpus, fit.estimates, anchor_idx)
            results[metric] = error_metrics(fit.estimates, truth, anchor_idx)
        bundle = {"command": "geodesic-demo", "metrics": results, "params": _params(cfg, corpus, len(anchor_idx))}
        save_log(ctx.path("metrics.json"), bundle)
    except StageError as e:
        ctx.fail(e)
        raise
    ctx.write_manifest()
    show(metrics_table({f"{k} area graph": v for k, v in results.items()}), "wall experiment")
    return bundle


def cmd_synth(cfg: SynthConfig) -> Path:
    """Generate a synthetic corpus file (plus its manifest sidecar and floor plan)."""
    echo(f"🚀 synth ({cfg.model}, M={cfg.M}, p={cfg.p}) -> {cfg.output}")
    try:
        corpus, plan = synthesize(cfg)
    except LocalizationError as e:
        raise StageError("synth", e) from e
    out = save_corpus(corpus, cfg.output)
    save_floorplan(plan, Path(cfg.output).with_suffix(".floorplan.json"))
    echo(f"✅ wrote {len(corpus)} records")
    return out


def cmd_ingest(cfg: IngestConfig) -> Path:
    """Convert an RSSI fingerprint CSV into the corpus format."""
    echo(f"🚀 ingest {cfg.path} -> {cfg.output}")
    try:
        corpus = ingest_rssi_dataset(cfg.path, cfg.floor, cfg.building, cfg.missing_sentinel,
                                     cfg.floor_value, cfg.min_coverage)
    except LocalizationError as e:
        raise StageError("ingest", e) from e
    out = save_corpus(corpus, cfg.output)
    heard = int((receiver_coverage(corpus) > 0).sum())
    echo(f"✅ {len(corpus)} locations, {heard} of {corpus.feature_shape[-1]} receivers detected at least once")
    return out


def cmd_extend(run_dir, corpus_path, output=None) -> dict:
    """
    Place the signals of a new corpus using a finished run: each new signal
    takes the estimate of its most similar already-localized signal.
    """
    run_dir = Path(run_dir)
    ctx = RunContext(run_dir / "extend", "extend")
    echo(f"🚀 extend {corpus_path} with run {run_dir}")
    try:
        with ctx.stage("load"):
            info = load_log(run_dir / "run.json")
            kernel = KernelSpec.model_validate(info["kernel"])
            known = load_corpus(run_dir / info["corpus"])
            new = load_corpus(corpus_path)
            model = load_model(run_dir / info["model"])
            est = pd.read_csv(run_dir / info["estimates"], dtype={"device_id": str}, float_precision="round_trip")
            if list(est["device_id"]) != known.device_ids:
                raise DataError("estimates do not match the run's corpus")
        with ctx.stage("extend"):
            placed = extend_many(graph_features(new, kernel), graph_features(known, kernel),
                                 est[["x_hat", "y_hat"]].to_numpy(dtype=float), kernel)
    except StageError as e:
        ctx.fail(e)
        raise

    out = Path(output) if output else ctx.path("extended_estimates.csv")
    write_estimates(out, new, placed, [])
    truth = new.positions()
    metrics = error_metrics(placed, truth)
    bundle = {"command": "extend", "metrics": metrics, "model": {"d": model.d, "l": model.l, "lambda": model.lam}}
    save_log(ctx.path("extend_metrics.json"), bundle)
    ctx.add_input(corpus_path)
    ctx.write_manifest()
    if metrics["count"]:
        show(metrics_table({"extension": metrics}), "out-of-sample error")
    echo(f"✅ placed {len(new)} signals -> {out}")
    return bundle
