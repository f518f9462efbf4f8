"""Two-phase topic workflow: grid-searched clustering of the projected
corpus, per-topic refinement on the original embeddings, and the report.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hierarchy import (
    ClusterSelection,
    CondensedTree,
    build_mst,
    condense,
    select_clusters,
    single_linkage,
)
from .io import Document, EmbeddingSet
from .membership import (
    ExemplarSet,
    MembershipMatrix,
    cluster_exemplars,
    membership_matrix,
    ranked_members,
)
from .metric import core_distances, mutual_reachability, pairwise_distances
from .tsne import Projection, TsneConfig, project, reseeded


class NoClustersError(RuntimeError):
    """Raised when no grid candidate produces any cluster."""


@dataclass(frozen=True)
class PipelineConfig:
    mcs_grid: tuple[int, ...] = tuple(range(5, 65))
    phase2_min_cluster_size: int = 5
    top_n: int = 5
    phase2_scope: str = "per_topic"  # or "global"
    tsne: TsneConfig = field(default_factory=TsneConfig)
    glosh_sign: str = "inverted"
    seed: int = 0
    min_samples: int | None = None  # defaults to the min cluster size

    def __post_init__(self) -> None:
        if not self.mcs_grid:
            raise ValueError("mcs_grid must not be empty")
        if any(m < 2 for m in self.mcs_grid):
            raise ValueError("every grid candidate must be >= 2")
        if self.phase2_min_cluster_size < 2:
            raise ValueError("phase2_min_cluster_size must be >= 2")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if self.phase2_scope not in ("per_topic", "global"):
            raise ValueError("phase2_scope must be 'per_topic' or 'global'")
        if self.glosh_sign not in ("inverted", "literal"):
            raise ValueError("glosh_sign must be 'inverted' or 'literal'")
        if self.min_samples is not None and self.min_samples < 1:
            raise ValueError("min_samples must be positive")
        object.__setattr__(self, "mcs_grid", tuple(int(m) for m in self.mcs_grid))
        object.__setattr__(self, "seed", int(self.seed) % 2**64)


@dataclass(frozen=True)
class PhaseResult:
    """One clustering pass over a (possibly subset) view of the corpus."""

    projection: Projection
    selection: ClusterSelection
    membership: MembershipMatrix
    retained: np.ndarray   # original indices with nonzero joint membership
    chosen_mcs: int
    indices: np.ndarray    # original indices of the rows in this result
    parent_topic: int | None = None
    tree: CondensedTree | None = None
    exemplars: ExemplarSet | None = None
    grid_scores: tuple[tuple[int, float, int], ...] | None = None


@dataclass(frozen=True)
class TopicRow:
    document: Document
    membership: float


@dataclass(frozen=True)
class Topic:
    label: str
    phase1_parent: int | None
    members: tuple[TopicRow, ...]          # sorted by membership descending
    representatives: tuple[TopicRow, ...]  # top_n prefix of members
    persistence: float
    exemplar_ids: tuple
    source: tuple[int, int]  # (phase-2 result index, local cluster index)


@dataclass(frozen=True)
class TopicReport:
    topics: tuple[Topic, ...]
    run_metadata: dict
    phase1: PhaseResult
    phase2: tuple[PhaseResult, ...]
    documents: tuple[Document, ...]


def derive_seed(seed: int, *key: int) -> int:
    """Stable sub-seed for a pipeline stage; stages never share streams."""
    entropy = (int(seed) % 2**64,) + tuple(int(k) for k in key)
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _cluster_once(coords: np.ndarray, mcs: int, k: int):
    distances = pairwise_distances(coords)
    core = core_distances(distances, k)
    reach = mutual_reachability(distances, core)
    merges = single_linkage(build_mst(reach))
    tree = condense(merges, mcs)
    return tree, select_clusters(tree), reach


def grid_search_mcs(
    coords: np.ndarray,
    grid: Sequence[int],
    min_samples: int | None = None,
) -> tuple[int, list[tuple[int, float, int]]]:
    """Score each candidate minimal cluster size by mean cluster persistence.

    Candidates yielding zero clusters score -inf; ties prefer the smaller
    size. Raises NoClustersError when every candidate is cluster-free.
    """
    grid = [int(m) for m in grid]
    if not grid:
        raise ValueError("grid must not be empty")
    if any(m < 2 for m in grid):
        raise ValueError("every grid candidate must be >= 2")
    n = coords.shape[0]
    distances = pairwise_distances(coords)
    row_sorted = np.sort(distances, axis=1)
    table: list[tuple[int, float, int]] = []
    for mcs in grid:
        k = min_samples if min_samples is not None else mcs
        if k > n - 1:
            table.append((mcs, float("-inf"), 0))
            continue
        reach = mutual_reachability(distances, row_sorted[:, k])
        merges = single_linkage(build_mst(reach))
        selection = select_clusters(condense(merges, mcs))
        if selection.n_clusters == 0:
            table.append((mcs, float("-inf"), 0))
        else:
            table.append(
                (mcs, float(selection.persistence.mean()), selection.n_clusters)
            )
    best_mcs, best_score = None, float("-inf")
    for mcs, score, _ in table:
        if score > best_score or (score == best_score and best_mcs is not None and mcs < best_mcs):
            best_mcs, best_score = mcs, score
    if best_mcs is None or best_score == float("-inf"):
        raise NoClustersError("no grid candidate produced any cluster")
    return best_mcs, table


def run_phase1(dataset: EmbeddingSet, cfg: PipelineConfig) -> PhaseResult:
    """Project the corpus, grid-search the minimal cluster size, cluster,
    and keep the points with nonzero membership."""
    n = len(dataset)
    if n < min(cfg.mcs_grid) + 1:
        raise ValueError(
            f"need at least {min(cfg.mcs_grid) + 1} documents for the grid"
        )
    projection = project(dataset.matrix, reseeded(cfg.tsne, derive_seed(cfg.seed, 1)))
    best_mcs, table = grid_search_mcs(projection.coords, cfg.mcs_grid, cfg.min_samples)
    k = cfg.min_samples if cfg.min_samples is not None else best_mcs
    tree, selection, reach = _cluster_once(projection.coords, best_mcs, k)
    exemplars = cluster_exemplars(tree, selection)
    membership = membership_matrix(tree, selection, exemplars, reach, cfg.glosh_sign)
    return PhaseResult(
        projection=projection,
        selection=selection,
        membership=membership,
        retained=np.flatnonzero(membership.p_any > 0),
        chosen_mcs=best_mcs,
        indices=np.arange(n, dtype=np.int64),
        tree=tree,
        exemplars=exemplars,
        grid_scores=tuple(table),
    )


def _passthrough(
    dataset: EmbeddingSet,
    phase1: PhaseResult,
    members: np.ndarray,
    mcs: int,
    parent: int | None,
) -> PhaseResult:
    """A topic too small to re-cluster: keep it whole, one cluster of all
    members, reported at their phase-1 assignment confidence."""
    count = members.shape[0]
    p_any = phase1.membership.p_any[members].copy()
    conditional = np.ones((count, 1), dtype=np.float64)
    membership = MembershipMatrix(
        conditional=conditional, p_any=p_any, joint=p_any[:, None].copy()
    )
    parent_persistence = (
        float(phase1.selection.persistence[parent]) if parent is not None else 0.0
    )
    selection = ClusterSelection(
        selected=np.zeros(1, dtype=np.int64),
        hard_labels=np.zeros(count, dtype=np.int64),
        probabilities=p_any,
        stabilities=np.zeros(1, dtype=np.float64),
        persistence=np.asarray([parent_persistence]),
    )
    projection = Projection(
        coords=phase1.projection.coords[members],
        initial_kl=phase1.projection.initial_kl,
        final_kl=phase1.projection.final_kl,
    )
    return PhaseResult(
        projection=projection,
        selection=selection,
        membership=membership,
        retained=members,
        chosen_mcs=mcs,
        indices=members,
        parent_topic=parent,
    )


def _refine(
    dataset: EmbeddingSet,
    phase1: PhaseResult,
    members: np.ndarray,
    cfg: PipelineConfig,
    parent: int | None,
    seed_key: tuple[int, ...],
) -> PhaseResult:
    mcs = cfg.phase2_min_cluster_size
    if members.shape[0] < 2 * mcs:
        return _passthrough(dataset, phase1, members, mcs, parent)
    sub_cfg = reseeded(cfg.tsne, derive_seed(cfg.seed, *seed_key))
    projection = project(dataset.matrix[members], sub_cfg)
    k = cfg.min_samples if cfg.min_samples is not None else mcs
    k = min(k, members.shape[0] - 1)
    tree, selection, reach = _cluster_once(projection.coords, mcs, k)
    if selection.n_clusters == 0:
        # Refinement dissolved everything; keep the coarse topic instead.
        return _passthrough(dataset, phase1, members, mcs, parent)
    exemplars = cluster_exemplars(tree, selection)
    membership = membership_matrix(tree, selection, exemplars, reach, cfg.glosh_sign)
    return PhaseResult(
        projection=projection,
        selection=selection,
        membership=membership,
        retained=members[membership.p_any > 0],
        chosen_mcs=mcs,
        indices=members,
        parent_topic=parent,
        tree=tree,
        exemplars=exemplars,
    )


def run_phase2(
    dataset: EmbeddingSet, phase1: PhaseResult, cfg: PipelineConfig
) -> list[PhaseResult]:
    """Re-project each phase-1 topic's members from their original
    embeddings and re-cluster at the phase-2 minimal cluster size."""
    if phase1.retained.shape[0] == 0:
        raise ValueError("phase 1 retained no points")
    if cfg.phase2_scope == "global":
        return [_refine(dataset, phase1, phase1.retained, cfg, None, (2,))]
    results = []
    for topic in range(phase1.selection.n_clusters):
        members = np.flatnonzero(
            (phase1.selection.hard_labels == topic) & (phase1.membership.p_any > 0)
        )
        if members.shape[0] == 0:
            continue
        results.append(_refine(dataset, phase1, members, cfg, topic, (2, topic)))
    return results


def assemble_report(
    dataset: EmbeddingSet,
    phase1: PhaseResult,
    phase2_results: Sequence[PhaseResult],
    cfg: PipelineConfig,
    timings: dict | None = None,
) -> TopicReport:
    """Enumerate phase-2 clusters as topic_1, topic_2, ... in (parent,
    cluster) order; members carry their joint membership toward their
    argmax cluster, sorted descending."""
    if not phase2_results:
        raise ValueError("need at least one phase-2 result")
    docs = dataset.documents
    topics: list[Topic] = []
    label_counter = 0
    for result_index, result in enumerate(phase2_results):
        local_docs = [docs[i] for i in result.indices]
        ranked = ranked_members(result.membership, local_docs)
        for cluster in range(result.membership.n_clusters):
            label_counter += 1
            rows = tuple(
                TopicRow(document=local_docs[point], membership=value)
                for point, value in ranked[cluster]
            )
            if result.exemplars is not None:
                exemplar_ids = tuple(
                    local_docs[p].id for p in result.exemplars[cluster]
                )
            else:
                exemplar_ids = tuple(row.document.id for row in rows[: cfg.top_n])
            topics.append(
                Topic(
                    label=f"topic_{label_counter}",
                    phase1_parent=result.parent_topic,
                    members=rows,
                    representatives=rows[: cfg.top_n],
                    persistence=float(result.selection.persistence[cluster]),
                    exemplar_ids=exemplar_ids,
                    source=(result_index, cluster),
                )
            )
    metadata = {
        "seed": cfg.seed,
        "config": _config_echo(cfg),
        "phase1_chosen_mcs": phase1.chosen_mcs,
        "phase1_clusters": int(phase1.selection.n_clusters),
        "topic_count": len(topics),
        "timings": dict(timings or {}),
    }
    return TopicReport(
        topics=tuple(topics),
        run_metadata=metadata,
        phase1=phase1,
        phase2=tuple(phase2_results),
        documents=docs,
    )


def _config_echo(cfg: PipelineConfig) -> dict:
    return {
        "mcs_grid": list(cfg.mcs_grid),
        "phase2_min_cluster_size": cfg.phase2_min_cluster_size,
        "top_n": cfg.top_n,
        "phase2_scope": cfg.phase2_scope,
        "glosh_sign": cfg.glosh_sign,
        "seed": cfg.seed,
        "min_samples": cfg.min_samples,
        "tsne": {
            "perplexity": cfg.tsne.perplexity,
            "iterations": cfg.tsne.iterations,
            "early_exaggeration_factor": cfg.tsne.early_exaggeration_factor,
            "early_exaggeration_iters": cfg.tsne.early_exaggeration_iters,
            "learning_rate": cfg.tsne.learning_rate,
            "momentum_initial": cfg.tsne.momentum_initial,
            "momentum_final": cfg.tsne.momentum_final,
            "seed": cfg.tsne.seed,
            "method": cfg.tsne.method,
            "bh_theta": cfg.tsne.bh_theta,
        },
    }


def run_pipeline(dataset: EmbeddingSet, cfg: PipelineConfig) -> TopicReport:
    """Phase 1, phase 2, report; deterministic for fixed input/config/seed."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    phase1 = run_phase1(dataset, cfg)
    timings["phase1_s"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    phase2_results = run_phase2(dataset, phase1, cfg)
    timings["phase2_s"] = time.perf_counter() - t1
    timings["total_s"] = time.perf_counter() - t0
    return assemble_report(dataset, phase1, phase2_results, cfg, timings)
