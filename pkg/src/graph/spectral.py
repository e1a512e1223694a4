"""
Symmetric normalized Laplacian and its low-frequency eigenvector embedding.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, orthogonal_procrustes
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh

from config.manager import settings
from src.errors import DisconnectedGraphError, EigenResidualError, IsolatedNodeError, ParameterError
from src.graph.kernels import WeightedGraph


@dataclass(frozen=True)
class Laplacian:
    matrix: np.ndarray  # I - D^-1/2 W D^-1/2
    degrees: np.ndarray
    n_components: int = 1

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Embedding:
    vectors: np.ndarray  # (M, dim), orthonormal columns
    eigenvalues: np.ndarray  # (dim,), nondecreasing unless rotated by align_to_coordinates
    skipped_trivial: bool = True

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=float)
        val = np.array(self.eigenvalues, dtype=float).reshape(-1)
        if vec.ndim != 2 or vec.shape[1] != val.shape[0]:
            raise ParameterError(f"embedding shape {vec.shape} does not match {val.shape[0]} eigenvalues")
        vec.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "eigenvalues", val)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def truncate(self, dim: int) -> "Embedding":
        """Keep the ``dim`` lowest-frequency columns."""
        if not 1 <= dim <= self.dim:
            raise ParameterError(f"cannot truncate a {self.dim}-column embedding to {dim} columns")
        return Embedding(self.vectors[:, :dim], self.eigenvalues[:dim], self.skipped_trivial)


def normalized_laplacian(graph: WeightedGraph) -> Laplacian:
    """
    L = D^-1/2 (D - W) D^-1/2 = I - D^-1/2 W D^-1/2.

    The scaling is applied as W * outer(s, s), which keeps L exactly symmetric.
    """
    w = graph.weights
    degrees = w.sum(axis=1)
    isolated = np.flatnonzero(degrees <= 0)
    if isolated.size:
        raise IsolatedNodeError(int(isolated[0]))
    s = 1.0 / np.sqrt(degrees)
    matrix = np.eye(len(w)) - w * np.outer(s, s)
    n_components, _ = connected_components(w > 0, directed=False)
    matrix.setflags(write=False)
    degrees.setflags(write=False)
    return Laplacian(matrix=matrix, degrees=degrees, n_components=int(n_components))


def _lowest_eigenpairs(matrix: np.ndarray, count: int):
    n = matrix.shape[0]
    if n <= settings.spectral.dense_limit:
        return eigh(matrix, subset_by_index=[0, count - 1])
    # Lowest eigenpairs of L are the largest of I - L, where Lanczos converges well.
    vals, vecs = eigsh(np.eye(n) - matrix, k=count, which="LA", tol=0)
    order = np.argsort(1.0 - vals, kind="stable")
    return (1.0 - vals)[order], vecs[:, order]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry positive (first index on ties)."""
    anchor = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[anchor, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _order_clusters(values: np.ndarray, vectors: np.ndarray, gap: float):
    """Within runs of eigenvalues closer than ``gap``, order columns by anchor index."""
    order = np.arange(len(values))
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] >= gap:
            if i - start > 1:
                block = order[start:i]
                anchors = np.argmax(np.abs(vectors[:, block]), axis=0)
                order[start:i] = block[np.argsort(anchors, kind="stable")]
            start = i
    return values[order], vectors[:, order]


def embed(lap: Laplacian, dim: int, skip_trivial: bool = True) -> Embedding:
    """
    Eigenvectors of the ``dim`` smallest eigenvalues of the Laplacian.

    Args:
        lap: normalized Laplacian.
        dim: number of embedding columns.
        skip_trivial: drop the eigenvalue-0 direction D^1/2 * 1 first.

    Returns:
        Embedding with orthonormal, sign-fixed columns.
    """
    m = lap.size
    offset = 1 if skip_trivial else 0
    if dim < 1 or dim + offset > m:
        raise ParameterError(f"dim={dim} is not available for a {m}-node graph (skip_trivial={skip_trivial})")
    if skip_trivial and lap.n_components > 1:
        raise DisconnectedGraphError(lap.n_components)

    values, vectors = _lowest_eigenpairs(lap.matrix, dim + offset)
    values, vectors = values[offset:], vectors[:, offset:]

    residual = np.linalg.norm(lap.matrix @ vectors - vectors * values, axis=0)
    worst = int(np.argmax(residual))
    if residual[worst] > settings.spectral.residual_tol:
        raise EigenResidualError(f"eigenvector {worst} residual {residual[worst]:.3e} exceeds tolerance")

    vectors = _fix_signs(vectors)
    values, vectors = _order_clusters(values, vectors, settings.spectral.cluster_gap)
    return Embedding(vectors, values, skipped_trivial=skip_trivial)


def explicit_regularizer(embedding: Embedding, lap: Laplacian) -> np.ndarray:
    """phi^T L phi, which equals diag(eigenvalues) for exact eigenvectors."""
    phi = embedding.vectors
    return phi.T @ lap.matrix @ phi


def trivial_direction(lap: Laplacian) -> np.ndarray:
    """Unit vector along D^1/2 * 1, the kernel of L for a connected graph."""
    v = np.sqrt(lap.degrees)
    return v / np.linalg.norm(v)


def embedding_residuals(embedding: Embedding, lap: Laplacian) -> np.ndarray:
    phi = embedding.vectors
    return np.linalg.norm(lap.matrix @ phi - phi * embedding.eigenvalues, axis=0)


def align_to_coordinates(embedding: Embedding, coords: np.ndarray) -> Embedding:
    """
    Rotate the embedding within its span so that its leading columns follow the
    given coordinates (orthogonal Procrustes against the centered, unit-norm
    coordinate columns padded with zeros).

    Calibration and 1-NN localization give the same estimates for any orthogonal
    transform of the area embedding. Near-degenerate pairs such as the two
    lowest harmonics of a square come out of the solver in an arbitrary
    rotation; after alignment column j tracks coordinate j.

    Eigenvalues become the Rayleigh quotient of each rotated column.
    """
    phi = embedding.vectors
    c = np.asarray(coords, dtype=float).reshape(len(phi), -1)
    c = c - c.mean(axis=0)
    norms = np.linalg.norm(c, axis=0)
    keep = min(c.shape[1], phi.shape[1])
    target = np.zeros_like(phi)
    target[:, :keep] = c[:, :keep] / np.where(norms[:keep] > 0, norms[:keep], 1.0)
    rotation, _ = orthogonal_procrustes(phi, target)
    values = (rotation ** 2).T @ embedding.eigenvalues
    return Embedding(phi @ rotation, values, embedding.skipped_trivial)
