"""Pairwise distances, core distances, mutual reachability, and the 1/d scale."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .io import EmbeddingSet

# Guard for the 1/d singularity: distances at or below DISTANCE_EPS map to
# LAMBDA_CAP so duplicate points cannot inject infinities downstream.
DISTANCE_EPS = 1e-12
LAMBDA_CAP = 1.0 / DISTANCE_EPS


@dataclass(frozen=True)
class MetricConfig:
    k: int
    metric: str = "euclidean"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.metric != "euclidean":
            raise ValueError(f"unsupported metric: {self.metric!r}")


@dataclass(frozen=True)
class MutualReachability:
    """Symmetric max(core_i, core_j, d_ij) matrix with its core distances."""

    values: np.ndarray
    core: np.ndarray


def pairwise_distances(data: EmbeddingSet | np.ndarray, config: MetricConfig | None = None) -> np.ndarray:
    """Dense symmetric Euclidean distance matrix with a zero diagonal."""
    if config is not None and config.metric != "euclidean":
        raise ValueError(f"unsupported metric: {config.metric!r}")
    matrix = data.matrix if isinstance(data, EmbeddingSet) else np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("need an n x d matrix with n >= 2")
    # pdist is single-threaded C with a fixed summation order, so the result
    # is identical regardless of BLAS thread settings.
    return squareform(pdist(matrix))


def core_distances(distances: np.ndarray, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest other point."""
    n = distances.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    # Column 0 of the row-sorted matrix is the self distance (0); column k is
    # therefore the k-th nearest other point even when duplicates are present.
    return np.sort(distances, axis=1)[:, k]


def mutual_reachability(distances: np.ndarray, core: np.ndarray) -> MutualReachability:
    """max(core_i, core_j, d_ij) for i != j, zero on the diagonal."""
    core = np.asarray(core, dtype=np.float64)
    if core.shape != (distances.shape[0],):
        raise ValueError("core vector length does not match the distance matrix")
    values = np.maximum(np.maximum.outer(core, core), distances)
    np.fill_diagonal(values, 0.0)
    return MutualReachability(values=values, core=core)


def lambda_of(d):
    """Density scale 1/d, capped at 1/1e-12 for d at or below 1e-12."""
    d = np.asarray(d, dtype=np.float64)
    result = np.where(d > DISTANCE_EPS, 1.0 / np.maximum(d, DISTANCE_EPS), LAMBDA_CAP)
    if result.ndim == 0:
        return float(result)
    return result
