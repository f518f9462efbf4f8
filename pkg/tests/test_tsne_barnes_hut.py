import numpy as np
import pytest

from fuzzytopics import _bh
from fuzzytopics.tsne import TsneConfig, project


def brute_repulsion(coords):
    n = coords.shape[0]
    rep = np.zeros((n, 2))
    z = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                diff = coords[i] - coords[j]
                w = 1.0 / (1.0 + diff @ diff)
                z += w
                rep[i] += w * w * diff
    return rep, z


def test_quadtree_theta_zero_is_exact():
    rng = np.random.default_rng(0)
    coords = rng.normal(size=(150, 2))
    tree = _bh.quadtree(coords)
    rep, z_rows = _bh.repulsion(coords, *tree, 0.0)
    want_rep, want_z = brute_repulsion(coords)
    assert np.max(np.abs(rep - want_rep)) <= 1e-9
    assert float(np.sum(z_rows)) == pytest.approx(want_z, rel=1e-12)


def test_quadtree_theta_half_close_to_exact():
    rng = np.random.default_rng(1)
    coords = rng.normal(scale=5.0, size=(300, 2))
    tree = _bh.quadtree(coords)
    rep, z_rows = _bh.repulsion(coords, *tree, 0.5)
    want_rep, want_z = brute_repulsion(coords)
    denom = np.linalg.norm(want_rep)
    assert np.linalg.norm(rep - want_rep) / denom <= 0.05
    assert abs(float(np.sum(z_rows)) - want_z) / want_z <= 0.05


def test_quadtree_handles_duplicates():
    coords = np.array([[0.0, 0.0]] * 5 + [[1.0, 1.0]] * 5)
    tree = _bh.quadtree(coords)
    rep, z_rows = _bh.repulsion(coords, *tree, 0.0)
    assert np.all(np.isfinite(rep))
    assert np.all(np.isfinite(z_rows))


def test_sparse_affinities_symmetric_and_normalized():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(80, 5))
    from scipy.spatial import cKDTree

    nn_dist, nn_idx = cKDTree(X).query(X, k=16, workers=1)
    cond = _bh.conditional_probs_knn(
        np.ascontiguousarray(nn_dist[:, 1:] ** 2), np.log2(5.0), 1e-5, 50
    )
    assert np.allclose(cond.sum(axis=1), 1.0, atol=1e-9)
    indptr, indices, data = _bh.sparse_joint_affinities(nn_idx[:, 1:], cond)
    assert data.sum() == pytest.approx(1.0, abs=1e-9)
    dense = np.zeros((80, 80))
    for i in range(80):
        for idx in range(indptr[i], indptr[i + 1]):
            dense[i, indices[idx]] = data[idx]
    assert np.allclose(dense, dense.T, atol=1e-15)
    assert np.all(np.diag(dense) == 0.0)


def test_barnes_hut_projection_separates_blobs():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(0, 0.5, (100, 6)), rng.normal(12, 0.5, (100, 6))])
    cfg = TsneConfig(method="barnes_hut", seed=4)
    result = project(X, cfg)
    assert result.final_kl <= result.initial_kl
    a, b = result.coords[:100], result.coords[100:]
    gap = np.min(
        np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    )
    spread = max(np.linalg.norm(a - a.mean(0), axis=1).max(),
                 np.linalg.norm(b - b.mean(0), axis=1).max())
    assert gap > spread


def test_barnes_hut_deterministic_per_theta():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 4))
    cfg = TsneConfig(method="barnes_hut", seed=6, iterations=300)
    a = project(X, cfg)
    b = project(X, cfg)
    assert np.array_equal(a.coords, b.coords)


def test_barnes_hut_config_validation():
    with pytest.raises(ValueError):
        TsneConfig(method="fmm")
    with pytest.raises(ValueError):
        TsneConfig(bh_theta=1.5)
