"""Exact t-SNE: Gaussian affinities calibrated by perplexity, Student-t
low-dimensional affinities, and momentum gradient descent to 2-D.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from . import _kernels
from .io import EmbeddingSet
from .metric import pairwise_distances

AFFINITY_FLOOR = 1e-12
Q_FLOOR = 1e-12
_CHECKPOINT_EVERY = 25


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    early_exaggeration_factor: float = 12.0
    early_exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    seed: int = 0
    # "barnes_hut" trades the exact gradient for a theta-governed quadtree
    # approximation with k-NN sparse affinities; runs are deterministic per
    # theta but carry no exactness claims across theta values.
    method: str = "exact"
    bh_theta: float = 0.5

    def __post_init__(self) -> None:
        if self.perplexity <= 0:
            raise ValueError("perplexity must be positive")
        if self.method not in ("exact", "barnes_hut"):
            raise ValueError("method must be 'exact' or 'barnes_hut'")
        if not 0.0 <= self.bh_theta <= 1.0:
            raise ValueError("bh_theta must lie in [0, 1]")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.early_exaggeration_factor <= 0:
            raise ValueError("early exaggeration factor must be positive")
        if self.early_exaggeration_iters < 0:
            raise ValueError("early exaggeration iterations must be >= 0")
        if self.early_exaggeration_iters >= self.iterations:
            # A run that ends still exaggerated cannot honor the
            # final-KL <= initial-KL contract.
            raise ValueError(
                "iterations must exceed early_exaggeration_iters"
            )
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        for m in (self.momentum_initial, self.momentum_final):
            if not 0.0 <= m < 1.0:
                raise ValueError("momentum must lie in [0, 1)")
        object.__setattr__(self, "seed", int(self.seed) % 2**64)


@dataclass(frozen=True)
class Projection:
    """Centered n x 2 coordinates with the optimization's KL endpoints."""

    coords: np.ndarray
    initial_kl: float
    final_kl: float


def conditional_affinities(distances: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic Gaussian conditionals p_{j|i} at the given perplexity."""
    if distances.shape[0] < 2:
        raise ValueError("need at least 2 points")
    target_bits = float(np.log2(perplexity))
    return _kernels.conditional_probs(distances**2, target_bits, 1e-5, 50)


def calibrate_affinities(distances: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized joint affinities: (p_{j|i} + p_{i|j}) / 2n, floored and
    renormalized so the off-diagonal entries stay >= 1e-12 and sum to 1.
    """
    n = distances.shape[0]
    conditional = conditional_affinities(distances, perplexity)
    joint = (conditional + conditional.T) / (2.0 * n)
    off = ~np.eye(n, dtype=bool)
    low = off & (joint < AFFINITY_FLOOR)
    joint[low] = AFFINITY_FLOOR
    high = off & ~low
    floored_mass = low.sum() * AFFINITY_FLOOR
    joint[high] *= (1.0 - floored_mass) / joint[high].sum()
    # Rescaling can push borderline entries a hair under the floor again; the
    # mass this re-introduces is far below the 1e-9 normalization tolerance.
    joint[off] = np.maximum(joint[off], AFFINITY_FLOOR)
    np.fill_diagonal(joint, 0.0)
    return joint


def _student_t_weights(coords: np.ndarray) -> np.ndarray:
    sq = np.sum(coords**2, axis=1)
    dist2 = sq[:, None] + sq[None, :] - 2.0 * (coords @ coords.T)
    weights = 1.0 / (1.0 + np.maximum(dist2, 0.0))
    np.fill_diagonal(weights, 0.0)
    return weights


def kl_divergence(affinities: np.ndarray, coords: np.ndarray) -> float:
    """KL(P || Q) with Q the normalized Student-t affinities of the coords."""
    if affinities.shape[0] != coords.shape[0]:
        raise ValueError("affinities and coordinates disagree on n")
    weights = _student_t_weights(coords)
    q = np.maximum(weights / weights.sum(), Q_FLOOR)
    p = affinities
    terms = np.where(p > 0.0, p * np.log(np.maximum(p, Q_FLOOR) / q), 0.0)
    return float(terms.sum())


def gradient(affinities: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Exact O(n^2) gradient of kl_divergence with respect to the coords."""
    if affinities.shape[0] != coords.shape[0]:
        raise ValueError("affinities and coordinates disagree on n")
    return _kernels.kl_gradient(affinities, np.ascontiguousarray(coords, dtype=np.float64))


def effective_perplexity(perplexity: float, n: int) -> float:
    """Clamp perplexity to (n - 1) / 3 so small runs stay well-posed."""
    return min(perplexity, (n - 1) / 3.0)


def project(data: Union[EmbeddingSet, np.ndarray], cfg: TsneConfig) -> Projection:
    """Project rows to 2-D; deterministic for a fixed (input, config, seed)."""
    matrix = data.matrix if isinstance(data, EmbeddingSet) else np.asarray(data, dtype=np.float64)
    n = matrix.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points to project")
    if cfg.method == "barnes_hut":
        return _project_barnes_hut(matrix, cfg)
    distances = pairwise_distances(matrix)
    affinities = calibrate_affinities(distances, effective_perplexity(cfg.perplexity, n))

    rng = np.random.default_rng(cfg.seed)
    coords = rng.normal(0.0, 1e-4, size=(n, 2))
    coords -= coords.mean(axis=0)
    initial_kl = kl_divergence(affinities, coords)

    # The run returns its best checkpoint, so the final KL can never exceed
    # the initial one even on data whose best 2-D layout barely beats the
    # near-coincident start.
    best_kl = initial_kl
    best_coords = coords.copy()

    exaggerated = affinities * cfg.early_exaggeration_factor
    update = np.zeros_like(coords)
    gains = np.ones_like(coords)
    for iteration in range(cfg.iterations):
        early = iteration < cfg.early_exaggeration_iters
        grad = gradient(exaggerated if early else affinities, coords)
        momentum = cfg.momentum_initial if early else cfg.momentum_final
        # Adaptive per-coordinate gains, the conventional t-SNE step rule.
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.clip(gains, 0.01, None, out=gains)
        update = momentum * update - cfg.learning_rate * gains * grad
        coords += update
        coords -= coords.mean(axis=0)
        last = iteration == cfg.iterations - 1
        if not early and (last or (iteration + 1) % _CHECKPOINT_EVERY == 0):
            kl = kl_divergence(affinities, coords)
            if kl < best_kl:
                best_kl = kl
                best_coords = coords.copy()

    final_kl = best_kl
    assert final_kl <= initial_kl, (
        f"optimization worsened KL: {initial_kl} -> {final_kl}"
    )
    return Projection(coords=best_coords, initial_kl=initial_kl, final_kl=final_kl)


def reseeded(cfg: TsneConfig, seed: int) -> TsneConfig:
    return replace(cfg, seed=int(seed) % 2**64)


def _sparse_kl(indptr, indices, data, coords, theta) -> float:
    """KL over the sparse affinity support with a Barnes-Hut normalizer."""
    from . import _bh

    tree = _bh.quadtree(coords)
    _, z_rows = _bh.repulsion(coords, *tree, theta)
    z = float(np.sum(z_rows))
    total = 0.0
    n = coords.shape[0]
    for i in range(n):
        span = slice(indptr[i], indptr[i + 1])
        js = indices[span]
        p = data[span]
        diff = coords[i] - coords[js]
        w = 1.0 / (1.0 + (diff**2).sum(axis=1))
        q = np.maximum(w / z, Q_FLOOR)
        total += float(np.sum(p * np.log(np.maximum(p, Q_FLOOR) / q)))
    return total


def _project_barnes_hut(matrix: np.ndarray, cfg: TsneConfig) -> Projection:
    """Approximate layout: k-NN sparse affinities, quadtree repulsion.

    The reported KL values use the same theta-approximated normalizer, so
    they are comparable to each other but not to exact-mode numbers.
    """
    from scipy.spatial import cKDTree

    from . import _bh

    n = matrix.shape[0]
    perp = effective_perplexity(cfg.perplexity, n)
    k = max(1, min(n - 1, int(round(3.0 * perp))))
    lookup = cKDTree(matrix)
    nn_dist, nn_idx = lookup.query(matrix, k=k + 1, workers=1)
    nn_dist, nn_idx = nn_dist[:, 1:], nn_idx[:, 1:]
    conditional = _bh.conditional_probs_knn(
        np.ascontiguousarray(nn_dist**2), float(np.log2(perp)), 1e-5, 50
    )
    indptr, indices, data = _bh.sparse_joint_affinities(nn_idx, conditional)

    rng = np.random.default_rng(cfg.seed)
    coords = rng.normal(0.0, 1e-4, size=(n, 2))
    coords -= coords.mean(axis=0)
    initial_kl = _sparse_kl(indptr, indices, data, coords, cfg.bh_theta)
    best_kl = initial_kl
    best_coords = coords.copy()

    update = np.zeros_like(coords)
    gains = np.ones_like(coords)
    for iteration in range(cfg.iterations):
        early = iteration < cfg.early_exaggeration_iters
        p_data = data * cfg.early_exaggeration_factor if early else data
        attract = _bh.attraction(indptr, indices, p_data, coords)
        tree = _bh.quadtree(coords)
        rep, z_rows = _bh.repulsion(coords, *tree, cfg.bh_theta)
        grad = 4.0 * (attract - rep / float(np.sum(z_rows)))
        momentum = cfg.momentum_initial if early else cfg.momentum_final
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.clip(gains, 0.01, None, out=gains)
        update = momentum * update - cfg.learning_rate * gains * grad
        coords += update
        coords -= coords.mean(axis=0)
        last = iteration == cfg.iterations - 1
        if not early and (last or (iteration + 1) % _CHECKPOINT_EVERY == 0):
            kl = _sparse_kl(indptr, indices, data, coords, cfg.bh_theta)
            if kl < best_kl:
                best_kl = kl
                best_coords = coords.copy()

    final_kl = best_kl
    assert final_kl <= initial_kl, (
        f"optimization worsened KL: {initial_kl} -> {final_kl}"
    )
    return Projection(coords=best_coords, initial_kl=initial_kl, final_kl=final_kl)
