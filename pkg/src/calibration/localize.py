"""
Localization in the calibrated space, the matching loss, and placement of new signals.
"""
from typing import Union

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from src.errors import DataError, DimensionError
from src.floorplan.plan import as_points
from src.graph.kernels import FeatureInput, KernelSpec, similarity_to_known
from src.graph.spectral import Embedding
from utils.parallel import map_chunks

_ROW_CHUNK = 256

Rows = Union[Embedding, np.ndarray]


def _rows(value: Rows) -> np.ndarray:
    if isinstance(value, Embedding):
        return value.vectors
    return np.atleast_2d(np.asarray(value, dtype=float))


def nearest_rows(queries: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """
    Index of the nearest reference row for every query row (Euclidean).
    Exact brute force so ties resolve to the smallest reference index.
    """
    if queries.shape[1] != reference.shape[1]:
        raise DimensionError(
            f"query rows have {queries.shape[1]} columns, reference rows {reference.shape[1]}"
        )

    def block(idx: range) -> np.ndarray:
        q = queries[idx.start:idx.stop]
        sq = cdist(q, reference, "sqeuclidean")
        return np.argmin(sq, axis=1)

    parts = map_chunks(block, len(queries), _ROW_CHUNK)
    return np.concatenate(parts) if parts else np.empty(0, dtype=int)


def localize_1nn(psi: np.ndarray, area_emb: Rows, area_points) -> np.ndarray:
    """
    x_hat_i = the area point whose embedding row is nearest to psi row i.

    Args:
        psi: calibrated signal representation, M x l.
        area_emb: area embedding (T x l).
        area_points: AreaSample or (T, 2) positions matching the embedding rows.

    Returns:
        (M, 2) estimated positions.
    """
    reference = _rows(area_emb)
    points = as_points(area_points)
    if len(points) != len(reference):
        raise DimensionError(f"{len(reference)} area embedding rows but {len(points)} area points")
    return points[nearest_rows(_rows(psi), reference)]


def matching_loss(area_emb: Rows, psi: Rows) -> float:
    """
    Symmetric nearest-neighbour loss between the area cloud and the calibrated signal cloud:
    mean over area rows of the squared distance to the nearest psi row, plus the
    mean over psi rows of the squared distance to the nearest area row.
    """
    area = _rows(area_emb)
    sig = _rows(psi)
    if area.shape[1] != sig.shape[1]:
        raise DimensionError(f"area rows have {area.shape[1]} columns, psi rows {sig.shape[1]}")
    to_signal, _ = cKDTree(sig).query(area, k=1)
    to_area, _ = cKDTree(area).query(sig, k=1)
    return float(np.mean(to_signal ** 2) + np.mean(to_area ** 2))


def extend_many(new_signals: FeatureInput, known_signals: FeatureInput, estimates: np.ndarray,
                kernel: KernelSpec) -> np.ndarray:
    """Place each new signal at the estimate of its most similar known signal (smallest index on ties)."""
    estimates = np.asarray(estimates, dtype=float).reshape(-1, 2)
    if len(known_signals) == 0:
        raise DataError("no known signals to extend from")
    if len(estimates) != len(known_signals):
        raise DimensionError(f"{len(known_signals)} known signals but {len(estimates)} estimates")
    sims = similarity_to_known(new_signals, known_signals, kernel)
    return estimates[np.argmax(sims, axis=1)]


def extend_out_of_sample(new_signal, known_signals: FeatureInput, estimates: np.ndarray,
                         kernel: KernelSpec) -> np.ndarray:
    """
    x_hat(S) = x_hat_k with k = argmax_j K(S, S^j).

    ``new_signal`` is one feature vector for the Gaussian kernels, or one K x p
    signal set for the trace-projection kernel.
    """
    if kernel.name == "trace_projection":
        query = [np.atleast_2d(np.asarray(new_signal))]
    else:
        query = np.asarray(new_signal).reshape(1, -1)
    return extend_many(query, known_signals, estimates, kernel)[0]
