"""
Persistence of graphs, embeddings and calibration models.

Dense matrices go to CSV with a JSON sidecar next to them (same stem,
".meta.json"); models are a single JSON file that references its embeddings.
"""
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from src.calibration.solver import SIGN_CONVENTION, CalibrationModel
from src.datasets.corpus import sidecar_path
from src.errors import DataError
from src.floorplan.plan import AreaSample
from src.graph.kernels import WeightedGraph
from src.graph.spectral import Embedding
from utils.simple_logger import load_log, save_log

FLOAT_FORMAT = "%.17g"


def save_graph(graph: WeightedGraph, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(graph.weights).to_csv(path, index=False, header=False, float_format=FLOAT_FORMAT)
    meta = {"kernel": graph.meta.get("kernel"), "params": graph.meta.get("params", {})}
    save_log(sidecar_path(path), meta)
    return path


def load_graph(path) -> WeightedGraph:
    path = Path(path)
    weights = pd.read_csv(path, header=None, float_precision="round_trip").to_numpy(dtype=float)
    sidecar = sidecar_path(path)
    meta = load_log(sidecar) if sidecar.exists() else {}
    return WeightedGraph(weights, meta)


def save_embedding(emb: Embedding, path, row_ids: Optional[Sequence[str]] = None) -> Path:
    """CSV with a row id column then one column per eigenvector; eigenvalues in the sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ids = list(row_ids) if row_ids is not None else [str(i) for i in range(len(emb))]
    if len(ids) != len(emb):
        raise DataError(f"{len(ids)} row ids for an embedding with {len(emb)} rows")
    df = pd.DataFrame(emb.vectors, columns=[f"u{j}" for j in range(emb.dim)])
    df.insert(0, "row_id", ids)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    save_log(sidecar_path(path), {
        "dim": emb.dim,
        "eigenvalues": emb.eigenvalues.tolist(),
        "sign_convention": SIGN_CONVENTION,
        "skipped_trivial": emb.skipped_trivial,
    })
    return path


def load_embedding(path) -> Embedding:
    path = Path(path)
    df = pd.read_csv(path, dtype={"row_id": str}, float_precision="round_trip")
    meta = load_log(sidecar_path(path))
    vectors = df.drop(columns=["row_id"]).to_numpy(dtype=float)
    return Embedding(vectors, np.asarray(meta["eigenvalues"], dtype=float), bool(meta["skipped_trivial"]))


def save_model(model: CalibrationModel, path, area_embedding_file: str,
               area_points_file: Optional[str] = None, signal_embedding_file: Optional[str] = None) -> Path:
    data = model.to_dict()
    data["area_embedding"] = area_embedding_file
    data["area_points"] = area_points_file
    data["signal_embedding"] = signal_embedding_file
    return save_log(path, data)


def load_model(path) -> CalibrationModel:
    """Rebuild a model, reading the referenced embedding (and area points) relative to the model file."""
    path = Path(path)
    data = load_log(path)
    if data.get("sign_convention") != SIGN_CONVENTION:
        raise DataError(f"{path}: unsupported sign convention {data.get('sign_convention')!r}")
    l, d = int(data["l"]), int(data["d"])
    c = np.asarray(data["C"], dtype=float).reshape(l, d)
    area_emb = load_embedding(path.parent / data["area_embedding"])
    points = None
    if data.get("area_points"):
        pts = pd.read_csv(path.parent / data["area_points"], float_precision="round_trip")[["x", "y"]].to_numpy(dtype=float)
        points = AreaSample(pts)
    return CalibrationModel(C=c, lam=float(data["lambda"]), d=d, l=l, area_embedding=area_emb, area_points=points)


def save_points(points: np.ndarray, path, ids: Optional[Sequence[str]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(np.asarray(points, dtype=float).reshape(-1, 2), columns=["x", "y"])
    if ids is not None:
        df.insert(0, "row_id", list(ids))
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path
