"""Shared fixtures and synthetic-data helpers."""

from __future__ import annotations

import functools
import sys

import numpy as np
import pytest

import fuzzytopics as ft


def blob_matrix(seed: int, n_per: int = 100, d: int = 32, sigma: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Three Gaussian blobs with centers pairwise >= 10 apart."""
    rng = np.random.default_rng(seed)
    centers = np.zeros((3, d))
    centers[1, 0] = 10.0
    centers[2, 1] = 10.0
    X = np.vstack([rng.normal(c, sigma, size=(n_per, d)) for c in centers])
    truth = np.repeat(np.arange(3), n_per)
    return X, truth


def nested_matrix(seed: int, d: int = 8, sigma: float = 0.8, n_per: int = 100) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two super-blobs 50 apart, each holding 3 sub-blobs 3 apart."""
    rng = np.random.default_rng(seed)
    sub = np.zeros((3, d))
    sub[1, 0] = 3.0
    sub[2, 1] = 3.0
    blocks = []
    truth_super, truth_sub = [], []
    for s in range(2):
        offset = np.zeros(d)
        offset[2] = 50.0 * s
        for b in range(3):
            blocks.append(rng.normal(sub[b] + offset, sigma, size=(n_per, d)))
            truth_super += [s] * n_per
            truth_sub += [s * 3 + b] * n_per
    return np.vstack(blocks), np.asarray(truth_super), np.asarray(truth_sub)


def toy_set(matrix: np.ndarray) -> ft.EmbeddingSet:
    n = matrix.shape[0]
    return ft.make_set(range(n), [f"doc {i}" for i in range(n)], matrix)


def criterion(name: str):
    """Print one pass/fail line per acceptance criterion."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"[acceptance] {name}: FAIL", file=sys.stderr)
                raise
            print(f"[acceptance] {name}: PASS")
            return result

        return wrapper

    return decorate


@pytest.fixture(scope="session")
def warm_kernels():
    """Trigger numba compilation outside any timed region."""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(12, 3))
    dataset = toy_set(X)
    cfg = ft.PipelineConfig(
        mcs_grid=(2, 3), tsne=ft.TsneConfig(iterations=5, early_exaggeration_iters=2), seed=0
    )
    try:
        ft.run_pipeline(dataset, cfg)
    except ft.NoClustersError:
        pass
    return True
