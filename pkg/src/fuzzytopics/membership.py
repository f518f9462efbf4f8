"""Fuzzy membership: per-cluster density scales and outlier scores fused by
softmax into conditional memberships, then scaled to joint probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hierarchy import NOISE, ClusterSelection, CondensedTree
from .io import Document
from .metric import MutualReachability, lambda_of

GloshSign = str  # "inverted" (default) or "literal"
_SIGNS = ("inverted", "literal")

ExemplarSet = dict[int, np.ndarray]


@dataclass(frozen=True)
class MembershipMatrix:
    """Conditional and joint membership over clusters, plus P(any)."""

    conditional: np.ndarray  # (n, C); noise rows are exactly zero
    p_any: np.ndarray        # (n,)
    joint: np.ndarray        # (n, C) = conditional * p_any per row

    @property
    def n_clusters(self) -> int:
        return self.conditional.shape[1]


def softmax(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("softmax needs a non-empty 1-D vector")
    shifted = np.exp(values - values.max())
    return shifted / shifted.sum()


def _row_softmax(matrix: np.ndarray) -> np.ndarray:
    shifted = np.exp(matrix - matrix.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def cluster_exemplars(tree: CondensedTree, selection: ClusterSelection) -> ExemplarSet:
    """Per selected cluster: the points of its leaf nodes that persist to the
    leaf's death lambda (the density peaks)."""
    if selection.n_clusters == 0:
        raise ValueError("no selected clusters")
    children = tree.children()
    points_of: dict[int, list[int]] = {}
    for p in range(tree.n_points):
        points_of.setdefault(int(tree.point_cluster[p]), []).append(p)

    exemplars: ExemplarSet = {}
    for index, node in enumerate(selection.selected):
        picked: list[int] = []
        stack = [int(node)]
        while stack:
            current = stack.pop()
            kids = children[current]
            if kids:
                stack.extend(kids)
                continue
            death = tree.lambda_death[current]
            for p in points_of.get(current, ()):
                if tree.point_lambda[p] >= death - 1e-12:
                    picked.append(p)
        exemplars[index] = np.sort(np.asarray(picked, dtype=np.int64))
    return exemplars


def distance_membership(
    point: int, exemplars: ExemplarSet, reachability: MutualReachability
) -> np.ndarray:
    """Per cluster: 1/d of the nearest exemplar in mutual-reachability terms."""
    count = len(exemplars)
    nearest = np.empty(count, dtype=np.float64)
    for c in range(count):
        nearest[c] = reachability.values[point, exemplars[c]].min()
    return np.asarray(lambda_of(nearest))


def outlier_membership(
    point: int,
    tree: CondensedTree,
    selection: ClusterSelection,
    exemplars: ExemplarSet,
    reachability: MutualReachability,
) -> np.ndarray:
    """Per-cluster outlier score: how far below each cluster's density
    ceiling the point sits, in [0, 1]."""
    lam = distance_membership(point, exemplars, reachability)
    deaths = tree.lambda_death[selection.selected]
    return _outlier_from_lambda(lam, deaths)


def _outlier_from_lambda(lam: np.ndarray, deaths: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(
            deaths > 0.0,
            (deaths - np.minimum(lam, deaths)) / deaths,
            1.0,
        )
    return np.clip(scores, 0.0, 1.0)


def fuse_membership(lam, glosh, sign: GloshSign = "inverted") -> np.ndarray:
    """Elementwise product of softmax(lambda) and softmax(g), renormalized.

    g is 1 - glosh under the default "inverted" sign so that low outlier
    scores up-weight a cluster; "literal" keeps the raw scores.
    """
    lam = np.asarray(lam, dtype=np.float64)
    glosh = np.asarray(glosh, dtype=np.float64)
    if lam.shape != glosh.shape:
        raise ValueError("lambda and glosh vectors differ in length")
    if sign not in _SIGNS:
        raise ValueError(f"sign must be one of {_SIGNS}")
    g = 1.0 - glosh if sign == "inverted" else glosh
    fused = softmax(lam) * softmax(g)
    return fused / fused.sum()


def joint_membership(conditional: np.ndarray, p_any: float) -> np.ndarray:
    if not 0.0 <= p_any <= 1.0:
        raise ValueError("p_any must lie in [0, 1]")
    return np.asarray(conditional, dtype=np.float64) * p_any


def membership_matrix(
    tree: CondensedTree,
    selection: ClusterSelection,
    exemplars: ExemplarSet,
    reachability: MutualReachability,
    sign: GloshSign = "inverted",
) -> MembershipMatrix:
    """Assemble the full n x C membership; noise rows are identically zero."""
    if sign not in _SIGNS:
        raise ValueError(f"sign must be one of {_SIGNS}")
    n = tree.n_points
    count = selection.n_clusters
    lam = np.empty((n, count), dtype=np.float64)
    for c in range(count):
        lam[:, c] = lambda_of(reachability.values[:, exemplars[c]].min(axis=1))
    deaths = tree.lambda_death[selection.selected]
    glosh = _outlier_from_lambda(lam, deaths[None, :])
    g = 1.0 - glosh if sign == "inverted" else glosh
    fused = _row_softmax(lam) * _row_softmax(g)
    conditional = fused / fused.sum(axis=1, keepdims=True)

    p_any = selection.probabilities.copy()
    noise = selection.hard_labels == NOISE
    conditional[noise] = 0.0
    joint = conditional * p_any[:, None]
    return MembershipMatrix(conditional=conditional, p_any=p_any, joint=joint)


def _id_sort_key(doc_id):
    if isinstance(doc_id, bool) or isinstance(doc_id, str):
        return (1, 0, str(doc_id))
    return (0, doc_id, "")


def ranked_members(
    membership: MembershipMatrix, documents: Sequence[Document]
) -> dict[int, list[tuple[int, float]]]:
    """Per cluster: (point index, joint value) for the points whose argmax is
    that cluster, sorted by value descending then document id ascending."""
    joint = membership.joint
    ranked: dict[int, list[tuple[int, float]]] = {c: [] for c in range(joint.shape[1])}
    if joint.shape[1] == 0:
        return ranked
    best = joint.argmax(axis=1)
    for point in range(joint.shape[0]):
        c = int(best[point])
        value = float(joint[point, c])
        if value > 0.0:
            ranked[c].append((point, value))
    for c, rows in ranked.items():
        rows.sort(key=lambda row: (-row[1], _id_sort_key(documents[row[0]].id)))
    return ranked


def representatives(
    membership: MembershipMatrix, documents: Sequence[Document], top_n: int
) -> dict[int, list[tuple[Document, float]]]:
    """Top-N members per cluster by joint membership."""
    if top_n < 1:
        raise ValueError("top_n must be at least 1")
    ranked = ranked_members(membership, documents)
    return {
        c: [(documents[point], value) for point, value in rows[:top_n]]
        for c, rows in ranked.items()
    }
