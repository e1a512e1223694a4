from src.graph.kernels import (
    KernelSpec,
    WeightedGraph,
    binary_mutual_knn,
    build_signal_graph,
    gaussian_affinity,
    knn_bandwidth,
    normalized_gaussian,
    self_tuning_affinity,
    self_tuning_gaussian,
    similarity_to_known,
    trace_projection_similarity,
)
from src.graph.spectral import Embedding, Laplacian, embed, normalized_laplacian

__all__ = [
    "Embedding",
    "KernelSpec",
    "Laplacian",
    "WeightedGraph",
    "binary_mutual_knn",
    "build_signal_graph",
    "gaussian_affinity",
    "embed",
    "knn_bandwidth",
    "normalized_gaussian",
    "normalized_laplacian",
    "self_tuning_affinity",
    "self_tuning_gaussian",
    "similarity_to_known",
    "trace_projection_similarity",
]
