"""
Affinity graphs over point sets and signal sets.

Kernels:
- normalized Gaussian with a global kNN bandwidth
- self-tuning Gaussian with per-point bandwidths
- trace-projection similarity between signal sets, symmetrized by a binary
  mutual kNN rule

Every weight matrix is built exactly symmetric, not just symmetric to tolerance.
"""
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel
from scipy.linalg import eigh
from scipy.spatial.distance import cdist

from src.errors import DataError, DegenerateBandwidthError, DimensionError, ParameterError

Metric = Literal["euclidean", "precomputed"]


class KernelSpec(BaseModel):
    """Which similarity builds the signal graph, and its parameters."""
    name: Literal["gaussian", "self_tuning", "trace_projection"] = "self_tuning"
    sigma: Optional[float] = None  # fixed bandwidth; None -> knn_bandwidth(k)
    k: int = 10  # neighbour rank for bandwidths
    rank: int = 10  # leading eigenvectors kept in each projection
    knn: int = 10  # mutual kNN size for the binary graph

    def params(self) -> Dict[str, Any]:
        if self.name == "trace_projection":
            return {"rank": self.rank, "knn": self.knn}
        if self.name == "self_tuning":
            return {"k": self.k}
        return {"sigma": self.sigma, "k": self.k}


@dataclass(frozen=True)
class WeightedGraph:
    weights: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionError(f"weight matrix must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise DataError("weight matrix has non-finite entries")
        if np.any(w < 0):
            raise DataError("weight matrix has negative entries")
        if not np.array_equal(w, w.T):
            raise DataError("weight matrix is not symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def as_feature_matrix(points) -> np.ndarray:
    """
    Items as rows of a real matrix. Complex features become [real | imag] columns,
    which preserves the l2 norm of every complex difference.
    """
    x = np.asarray(points)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    elif x.ndim > 2:
        x = x.reshape(x.shape[0], -1)
    if np.iscomplexobj(x):
        x = np.concatenate([x.real, x.imag], axis=1)
    x = x.astype(float)
    if not np.all(np.isfinite(x)):
        raise DataError("feature matrix has non-finite entries")
    return x


def _symmetric(matrix: np.ndarray) -> np.ndarray:
    """Mirror the strict upper triangle; the diagonal becomes zero."""
    upper = np.triu(matrix, 1)
    return upper + upper.T


def pairwise_sq_distances(points, metric: Metric = "euclidean") -> np.ndarray:
    if metric == "precomputed":
        dist = np.asarray(points, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise DimensionError(f"precomputed distances must be square, got shape {dist.shape}")
        sq = dist ** 2
    else:
        x = as_feature_matrix(points)
        sq = cdist(x, x, "sqeuclidean")
    if sq.shape[0] < 2:
        raise ParameterError("at least two items are needed to build a graph")
    return _symmetric(sq)


def kth_neighbor_distances(sq_dist: np.ndarray, k: int) -> np.ndarray:
    """Distance from every item to its k-th nearest neighbour, the item itself excluded."""
    m = sq_dist.shape[0]
    if not 1 <= k < m:
        raise ParameterError(f"k must satisfy 1 <= k < M (k={k}, M={m})")
    d = np.sqrt(sq_dist)
    np.fill_diagonal(d, np.inf)
    return np.partition(d, k - 1, axis=1)[:, k - 1]


def knn_bandwidth(points, k: int = 10, metric: Metric = "euclidean") -> float:
    """
    Global bandwidth sigma = max_i ||x_i - x_k(i)||.

    Returns 0.0 for degenerate inputs (e.g. duplicated points with k=1); the
    Gaussian kernels reject that value.
    """
    sigma = float(kth_neighbor_distances(pairwise_sq_distances(points, metric), k).max())
    if sigma == 0.0:
        warnings.warn("kNN bandwidth is zero: points are duplicated within their k-neighbourhood")
    return sigma


def _normalize(affinity: np.ndarray) -> np.ndarray:
    row = affinity.sum(axis=1)
    return affinity / np.outer(row, row)


def gaussian_affinity(points, sigma: float, metric: Metric = "euclidean") -> np.ndarray:
    """exp(-|x_i - x_j|^2 / sigma^2), the numerator of the normalized Gaussian kernel."""
    if not sigma > 0:
        raise DegenerateBandwidthError(f"degenerate bandwidth: sigma must be positive, got {sigma}")
    return np.exp(-pairwise_sq_distances(points, metric) / sigma ** 2)


def self_tuning_affinity(points, k: int = 10, metric: Metric = "euclidean") -> np.ndarray:
    """exp(-|x_i - x_j|^2 / (sigma_i * sigma_j)) with sigma_i the distance to the k-th neighbour."""
    sq = pairwise_sq_distances(points, metric)
    sig = kth_neighbor_distances(sq, k)
    zero = np.flatnonzero(sig == 0)
    if zero.size:
        raise DegenerateBandwidthError(
            f"degenerate bandwidth: item {int(zero[0])} has a duplicate within its {k} nearest neighbours",
            index=int(zero[0]),
        )
    return np.exp(-sq / np.outer(sig, sig))


def normalized_gaussian(points, sigma: float, metric: Metric = "euclidean") -> WeightedGraph:
    """
    K(x_i, x_j) = exp(-|x_i - x_j|^2 / sigma^2) / (sum_k exp(-|x_i - x_k|^2 / sigma^2) * sum_t exp(-|x_j - x_t|^2 / sigma^2))

    Both denominator sums run over every item, self included, so the diagonal is nonzero.
    """
    weights = _normalize(gaussian_affinity(points, sigma, metric))
    return WeightedGraph(weights, {"kernel": "normalized_gaussian", "params": {"sigma": float(sigma), "metric": metric}})


def self_tuning_gaussian(points, k: int = 10, metric: Metric = "euclidean") -> WeightedGraph:
    """Normalized Gaussian with per-item bandwidths sigma_i = ||x_i - x_k(i)||, pairwise scale sigma_i * sigma_j."""
    weights = _normalize(self_tuning_affinity(points, k, metric))
    return WeightedGraph(weights, {"kernel": "self_tuning_gaussian", "params": {"k": int(k), "metric": metric}})


def _check_sets(signal_sets: Sequence[np.ndarray], rank: int) -> List[np.ndarray]:
    sets = [np.atleast_2d(np.asarray(s)) for s in signal_sets]
    if not sets:
        raise DataError("no signal sets given")
    p = sets[0].shape[1]
    for i, s in enumerate(sets):
        if s.ndim != 2 or s.shape[1] != p:
            raise DimensionError(f"signal set {i} has shape {s.shape}, expected (K, {p})")
    if not 1 <= rank <= p:
        raise ParameterError(f"rank must satisfy 1 <= rank <= p (rank={rank}, p={p})")
    return sets


def second_moments(signal_sets: Sequence[np.ndarray], rank: int = 10) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-set second moment R = S^H S / ||S||_F^2 (p x p, unit trace) and the
    projector P onto its ``rank`` leading eigenvectors.

    Returns:
        (R, P), each of shape (M, p, p), complex.
    """
    sets = _check_sets(signal_sets, rank)
    m, p = len(sets), sets[0].shape[1]
    moments = np.empty((m, p, p), dtype=complex)
    projectors = np.empty((m, p, p), dtype=complex)
    for i, s in enumerate(sets):
        norm2 = float(np.vdot(s, s).real)
        if norm2 == 0.0:
            raise DataError(f"signal set {i} has zero norm")
        r = s.conj().T @ s / norm2
        r = (r + r.conj().T) / 2
        _, vecs = eigh(r, subset_by_index=[p - rank, p - 1])
        moments[i] = r
        projectors[i] = vecs @ vecs.conj().T
    return moments, projectors


def trace_similarity(moments: np.ndarray, projectors: np.ndarray) -> np.ndarray:
    """F[i, j] = Re Tr(R_i^H P_j)."""
    m = moments.shape[0]
    return np.real(moments.reshape(m, -1).conj() @ projectors.reshape(projectors.shape[0], -1).T)


def trace_projection_similarity(signal_sets: Sequence[np.ndarray], rank: int = 10) -> np.ndarray:
    """
    Similarity F[i][j] = Re Tr(R_i^H P_j) between signal sets (each K x p).

    F is invariant to rescaling any set by a nonzero complex scalar and may be
    asymmetric; its entries lie in [0, 1].
    """
    moments, projectors = second_moments(signal_sets, rank)
    return trace_similarity(moments, projectors)


def binary_mutual_knn(similarity: np.ndarray, k: int = 10) -> WeightedGraph:
    """
    W[i][j] = 1 iff j is among the k most similar to i (self excluded) or i is
    among the k most similar to j. Ties go to the smaller index.
    """
    sim = np.asarray(similarity, dtype=float)
    if sim.ndim != 2 or sim.shape[0] != sim.shape[1]:
        raise DimensionError(f"similarity must be square, got shape {sim.shape}")
    m = sim.shape[0]
    if not 1 <= k < m:
        raise ParameterError(f"k must satisfy 1 <= k < M (k={k}, M={m})")
    scores = sim.copy()
    np.fill_diagonal(scores, -np.inf)
    top = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    chosen = np.zeros((m, m), dtype=bool)
    chosen[np.arange(m)[:, None], top] = True
    weights = (chosen | chosen.T).astype(float)
    return WeightedGraph(weights, {"kernel": "binary_mutual_knn", "params": {"k": int(k)}})


FeatureInput = Union[np.ndarray, Sequence[np.ndarray]]


def build_signal_graph(features: FeatureInput, spec: KernelSpec) -> Tuple[WeightedGraph, np.ndarray]:
    """
    Signal graph for a kernel spec.

    Args:
        features: (M, p) feature rows for the Gaussian kernels, or M signal sets
            (K x p) for the trace-projection kernel.
        spec: kernel choice and parameters.

    Returns:
        (graph, similarity) where similarity is what nearest-labeled rules rank
        by: the Gaussian affinity before normalization, or the F matrix.
    """
    if spec.name == "trace_projection":
        similarity = trace_projection_similarity(features, spec.rank)
        graph = binary_mutual_knn(similarity, spec.knn)
        meta = {"kernel": "trace_projection+binary_mutual_knn", "params": spec.params()}
        return WeightedGraph(graph.weights, meta), similarity
    if spec.name == "self_tuning":
        affinity = self_tuning_affinity(features, spec.k)
        meta = {"kernel": "self_tuning_gaussian", "params": spec.params()}
    else:
        sigma = spec.sigma if spec.sigma is not None else knn_bandwidth(features, spec.k)
        affinity = gaussian_affinity(features, sigma)
        meta = {"kernel": "normalized_gaussian", "params": {"sigma": float(sigma), "k": spec.k}}
    return WeightedGraph(_normalize(affinity), meta), affinity


def similarity_to_known(queries: FeatureInput, known: FeatureInput, spec: KernelSpec) -> np.ndarray:
    """
    Similarity between each query and every known item under the kernel of
    ``spec``: the Gaussian affinity (bandwidths taken from the known set) or
    Re Tr(R_q^H P_j) for signal sets.

    Returns:
        (Q, M) similarity matrix.
    """
    if spec.name == "trace_projection":
        q_moments, _ = second_moments(queries, spec.rank)
        _, k_proj = second_moments(known, spec.rank)
        if q_moments.shape[1] != k_proj.shape[1]:
            raise DimensionError("query and known signal sets differ in dimension p")
        return trace_similarity(q_moments, k_proj)

    x_known = as_feature_matrix(known)
    x_query = as_feature_matrix(queries)
    if x_query.shape[1] != x_known.shape[1]:
        raise DimensionError(
            f"query features have dimension {x_query.shape[1]}, known features {x_known.shape[1]}"
        )
    sq_query = cdist(x_query, x_known, "sqeuclidean")

    if spec.name == "self_tuning":
        sig_known = kth_neighbor_distances(pairwise_sq_distances(x_known), spec.k)
        k_q = min(spec.k, x_known.shape[0])
        sig_query = np.sqrt(np.partition(sq_query, k_q - 1, axis=1)[:, k_q - 1])
        if np.any(sig_known == 0) or np.any(sig_query == 0):
            raise DegenerateBandwidthError("degenerate bandwidth: duplicated signals in the kNN neighbourhood")
        return np.exp(-sq_query / np.outer(sig_query, sig_known))

    sigma = spec.sigma if spec.sigma is not None else knn_bandwidth(x_known, spec.k)
    if not sigma > 0:
        raise DegenerateBandwidthError(f"degenerate bandwidth: sigma must be positive, got {sigma}")
    return np.exp(-sq_query / sigma ** 2)
