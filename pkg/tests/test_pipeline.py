import numpy as np
import pytest

import fuzzytopics as ft
from conftest import blob_matrix, nested_matrix, toy_set
from fuzzytopics.pipeline import NoClustersError, derive_seed
from fuzzytopics.tsne import TsneConfig


def quick_cfg(**kwargs):
    defaults = dict(mcs_grid=(5, 10, 20), seed=0)
    defaults.update(kwargs)
    return ft.PipelineConfig(**defaults)


def test_config_validation():
    with pytest.raises(ValueError):
        ft.PipelineConfig(mcs_grid=())
    with pytest.raises(ValueError):
        ft.PipelineConfig(mcs_grid=(1, 5))
    with pytest.raises(ValueError):
        ft.PipelineConfig(phase2_scope="both")
    with pytest.raises(ValueError):
        ft.PipelineConfig(top_n=0)


def test_derive_seed_stable_and_distinct():
    assert derive_seed(7, 1) == derive_seed(7, 1)
    assert derive_seed(7, 1) != derive_seed(7, 2)
    assert derive_seed(7, 2, 0) != derive_seed(7, 2, 1)


def test_grid_search_prefers_candidate_with_clusters():
    X, _ = blob_matrix(0)
    proj = ft.project(X, TsneConfig(seed=1))
    best, table = ft.grid_search_mcs(proj.coords, [5, 25, 200])
    scores = dict((m, s) for m, s, _ in table)
    assert scores[200] == float("-inf")
    assert best in (5, 25)
    assert scores[best] > 0.0


def test_grid_search_all_impossible_raises():
    rng = np.random.default_rng(0)
    coords = rng.normal(size=(30, 2))
    with pytest.raises(NoClustersError):
        ft.grid_search_mcs(coords, [31])


def test_grid_search_tie_prefers_smaller_mcs():
    X, _ = blob_matrix(1)
    proj = ft.project(X, TsneConfig(seed=2))
    best, table = ft.grid_search_mcs(proj.coords, [12, 12, 12])
    assert best == 12
    assert len(table) == 3


def test_phase1_three_blobs_recovery():
    retained_ratios = []
    for seed in range(4):
        X, truth = blob_matrix(seed)
        result = ft.run_phase1(toy_set(X), quick_cfg(seed=seed))
        assert result.selection.n_clusters == 3
        retained_ratios.append(result.retained.shape[0] / X.shape[0])
        assert result.chosen_mcs in (5, 10, 20)
    assert min(retained_ratios) >= 0.9


def test_phase1_requires_enough_points():
    rng = np.random.default_rng(0)
    dataset = toy_set(rng.normal(size=(4, 3)))
    with pytest.raises(ValueError, match="at least"):
        ft.run_phase1(dataset, quick_cfg(mcs_grid=(5, 10)))


def test_phase1_deterministic():
    X, _ = blob_matrix(2)
    dataset = toy_set(X)
    a = ft.run_phase1(dataset, quick_cfg(seed=5))
    b = ft.run_phase1(dataset, quick_cfg(seed=5))
    assert np.array_equal(a.projection.coords, b.projection.coords)
    assert np.array_equal(a.selection.hard_labels, b.selection.hard_labels)
    assert np.array_equal(a.membership.joint, b.membership.joint)
    assert a.chosen_mcs == b.chosen_mcs


def test_phase2_small_topic_passes_through():
    X, _ = blob_matrix(3, n_per=40)
    dataset = toy_set(X)
    cfg = quick_cfg(phase2_min_cluster_size=25)  # 40 < 2*25 forces pass-through
    phase1 = ft.run_phase1(dataset, cfg)
    results = ft.run_phase2(dataset, phase1, cfg)
    assert len(results) == phase1.selection.n_clusters
    for r in results:
        assert r.membership.n_clusters == 1
        assert np.all(r.membership.conditional == 1.0)
        # pass-through keeps the phase-1 confidence
        assert np.allclose(r.membership.joint[:, 0], phase1.membership.p_any[r.indices])


def test_phase2_nested_blobs_refine():
    X, _, _ = nested_matrix(0)
    dataset = toy_set(X)
    cfg = ft.PipelineConfig(mcs_grid=(8, 16, 32, 64, 96, 128), seed=0)
    phase1 = ft.run_phase1(dataset, cfg)
    assert phase1.selection.n_clusters == 2
    results = ft.run_phase2(dataset, phase1, cfg)
    assert len(results) == 2
    for r in results:
        assert r.selection.n_clusters >= 2
        # phase-2 topics partition the parent's retained members
        assert set(r.indices.tolist()) <= set(phase1.retained.tolist())


def test_phase2_global_scope_single_run():
    X, _ = blob_matrix(4)
    dataset = toy_set(X)
    cfg = quick_cfg(phase2_scope="global")
    phase1 = ft.run_phase1(dataset, cfg)
    results = ft.run_phase2(dataset, phase1, cfg)
    assert len(results) == 1
    assert results[0].parent_topic is None
    assert np.array_equal(results[0].indices, phase1.retained)


def test_phase2_requires_retained_points():
    X, _ = blob_matrix(5)
    dataset = toy_set(X)
    cfg = quick_cfg()
    phase1 = ft.run_phase1(dataset, cfg)
    emptied = ft.PhaseResult(
        projection=phase1.projection,
        selection=phase1.selection,
        membership=phase1.membership,
        retained=np.empty(0, dtype=np.int64),
        chosen_mcs=phase1.chosen_mcs,
        indices=phase1.indices,
    )
    with pytest.raises(ValueError):
        ft.run_phase2(dataset, emptied, cfg)


def test_report_labels_and_membership_positive():
    X, _ = blob_matrix(6)
    dataset = toy_set(X)
    report = ft.run_pipeline(dataset, quick_cfg(seed=11))
    labels = [t.label for t in report.topics]
    assert labels == [f"topic_{i}" for i in range(1, len(labels) + 1)]
    assert len(set(labels)) == len(labels)
    for topic in report.topics:
        values = [row.membership for row in topic.members]
        assert all(v > 0 for v in values)
        assert values == sorted(values, reverse=True)
        assert len(topic.representatives) <= quick_cfg().top_n
        assert [r.membership for r in topic.representatives] == values[: len(topic.representatives)]


def test_report_members_were_retained_in_phase1():
    X, _, _ = nested_matrix(1)
    dataset = toy_set(X)
    cfg = ft.PipelineConfig(mcs_grid=(8, 16, 32, 64, 96, 128), seed=1)
    report = ft.run_pipeline(dataset, cfg)
    retained_ids = {dataset.documents[i].id for i in report.phase1.retained}
    for topic in report.topics:
        for row in topic.members:
            assert row.document.id in retained_ids


def test_report_topic_count_at_least_phase1_count():
    X, _, _ = nested_matrix(2)
    dataset = toy_set(X)
    cfg = ft.PipelineConfig(mcs_grid=(8, 16, 32, 64, 96, 128), seed=2)
    report = ft.run_pipeline(dataset, cfg)
    assert len(report.topics) >= report.phase1.selection.n_clusters
    assert report.run_metadata["phase1_chosen_mcs"] == report.phase1.chosen_mcs


def test_pipeline_deterministic_reports():
    X, _ = blob_matrix(7)
    dataset = toy_set(X)
    a = ft.run_pipeline(dataset, quick_cfg(seed=3))
    b = ft.run_pipeline(dataset, quick_cfg(seed=3))
    assert [t.label for t in a.topics] == [t.label for t in b.topics]
    for ta, tb in zip(a.topics, b.topics):
        assert [(r.document.id, r.membership) for r in ta.members] == [
            (r.document.id, r.membership) for r in tb.members
        ]


def test_phase2_partition_of_parent():
    X, _ = blob_matrix(8)
    dataset = toy_set(X)
    cfg = quick_cfg(seed=4)
    phase1 = ft.run_phase1(dataset, cfg)
    results = ft.run_phase2(dataset, phase1, cfg)
    for r in results:
        parent_members = np.flatnonzero(
            (phase1.selection.hard_labels == r.parent_topic)
            & (phase1.membership.p_any > 0)
        )
        assert np.array_equal(np.sort(r.indices), parent_members)
        # within the sub-run, topics + noise partition the members
        noise = r.membership.p_any == 0
        labels = r.selection.hard_labels
        assert np.all((labels == -1) == noise)


def test_chosen_mcs_in_grid():
    X, _ = blob_matrix(9)
    result = ft.run_phase1(toy_set(X), quick_cfg(seed=6))
    assert result.chosen_mcs in quick_cfg().mcs_grid
