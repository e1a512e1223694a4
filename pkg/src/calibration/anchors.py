"""
Anchor selection: which devices have known positions in an experiment.
"""
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

from src.errors import ParameterError
from src.graph.kernels import as_feature_matrix

AnchorMode = Literal["random", "kmeans", "explicit"]


def _kmeans_anchors(features: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Item nearest each k-means center; a center whose nearest item is taken gets the next-nearest unused one."""
    km = KMeans(n_clusters=n, n_init=10, random_state=seed).fit(features)
    dist = cdist(km.cluster_centers_, features, "sqeuclidean")
    used = np.zeros(len(features), dtype=bool)
    chosen = []
    for row in dist:
        for idx in np.argsort(row, kind="stable"):
            if not used[idx]:
                used[idx] = True
                chosen.append(int(idx))
                break
    return np.asarray(chosen, dtype=int)


def select_anchors(
    n: int,
    count: int,
    mode: AnchorMode = "random",
    *,
    seed: int = 0,
    features=None,
    explicit: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Pick N anchor indices among ``count`` devices.

    Args:
        n: number of anchors.
        count: number of devices M.
        mode: "random" (uniform without replacement), "kmeans" (item nearest each
            of N k-means centers on the signal features), or "explicit".
        seed: RNG / k-means seed.
        features: (M, p) features, required for "kmeans".
        explicit: the indices for "explicit".

    Returns:
        Sorted array of N distinct indices.
    """
    if mode == "explicit":
        if explicit is None:
            raise ParameterError("explicit anchor mode needs a list of indices")
        ids = np.asarray(list(explicit), dtype=int)
        if ids.size == 0:
            raise ParameterError("explicit anchor list is empty")
        if len(np.unique(ids)) != len(ids):
            raise ParameterError("explicit anchor indices repeat")
        if ids.min() < 0 or ids.max() >= count:
            raise ParameterError(f"explicit anchor indices must lie in [0, {count})")
        return np.sort(ids)

    if not 1 <= n < count:
        raise ParameterError(f"anchor count must satisfy 1 <= N < M (N={n}, M={count})")

    if mode == "random":
        rng = np.random.default_rng(seed)
        return np.sort(rng.choice(count, size=n, replace=False))
    if mode == "kmeans":
        if features is None:
            raise ParameterError("k-means anchor selection needs signal features")
        x = as_feature_matrix(features)
        if len(x) != count:
            raise ParameterError(f"{len(x)} feature rows for {count} devices")
        return np.sort(_kmeans_anchors(x, n, seed))
    raise ParameterError(f"unknown anchor mode {mode!r}")
