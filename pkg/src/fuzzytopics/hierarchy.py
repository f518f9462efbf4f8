"""Density-based hierarchical clustering: MST over mutual reachability,
single linkage, condensed tree, stability-based selection, and GLOSH.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .metric import MutualReachability, lambda_of

NOISE = -1


@dataclass(frozen=True)
class CondensedTree:
    """Cluster nodes (root is node 0) plus each point's departure record.

    size[c] counts every point that passes through node c, so it equals the
    number of departure records in c's subtree.
    """

    parent: np.ndarray        # (m,) int64, -1 at the root
    lambda_birth: np.ndarray  # (m,)
    lambda_death: np.ndarray  # (m,)
    size: np.ndarray          # (m,) int64
    point_cluster: np.ndarray  # (n,) int64, node the point falls out of
    point_lambda: np.ndarray   # (n,) departure density scale

    @property
    def n_nodes(self) -> int:
        return self.parent.shape[0]

    @property
    def n_points(self) -> int:
        return self.point_cluster.shape[0]

    def children(self) -> list[list[int]]:
        lists: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for node in range(1, self.n_nodes):
            lists[self.parent[node]].append(node)
        return lists


@dataclass(frozen=True)
class ClusterSelection:
    """Flat clustering chosen from the condensed tree by excess of mass."""

    selected: np.ndarray      # (C,) condensed node ids, ascending
    hard_labels: np.ndarray   # (n,) cluster index or NOISE
    probabilities: np.ndarray  # (n,) in [0, 1], 0 iff noise
    stabilities: np.ndarray   # (C,)
    persistence: np.ndarray   # (C,) in [0, 1]

    @property
    def n_clusters(self) -> int:
        return self.selected.shape[0]


def build_mst(reachability: MutualReachability | np.ndarray) -> np.ndarray:
    """(n-1) x 3 array of (i, j, weight) MST edges, i < j, in build order."""
    weights = reachability.values if isinstance(reachability, MutualReachability) else np.asarray(reachability, dtype=np.float64)
    if weights.shape[0] < 2:
        raise ValueError("need at least 2 points")
    return _kernels.prim_mst(np.ascontiguousarray(weights, dtype=np.float64))


def single_linkage(mst_edges: np.ndarray) -> np.ndarray:
    """Merge list in scipy linkage layout: (left, right, height, size).

    Edges are processed in ascending weight order; equal weights keep the
    MST build order so the dendrogram is reproducible.
    """
    n = mst_edges.shape[0] + 1
    order = np.argsort(mst_edges[:, 2], kind="stable")
    parent = np.arange(2 * n - 1, dtype=np.int64)
    size = np.ones(2 * n - 1, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    merges = np.empty((n - 1, 4), dtype=np.float64)
    for t, e in enumerate(order):
        i, j, weight = mst_edges[e]
        ra, rb = find(int(i)), find(int(j))
        if ra > rb:
            ra, rb = rb, ra
        new = n + t
        merges[t] = (ra, rb, weight, size[ra] + size[rb])
        parent[ra] = new
        parent[rb] = new
        size[new] = size[ra] + size[rb]
    return merges


def _leaf_points(merges: np.ndarray, node: int, n: int) -> list[int]:
    points: list[int] = []
    stack = [node]
    while stack:
        h = stack.pop()
        if h < n:
            points.append(h)
        else:
            row = merges[h - n]
            stack.append(int(row[0]))
            stack.append(int(row[1]))
    return points


def condense(merges: np.ndarray, min_cluster_size: int) -> CondensedTree:
    """Walk the dendrogram top-down at lambda = 1/height.

    A split whose two sides both hold at least min_cluster_size points
    creates two child cluster nodes; otherwise the undersized side's points
    fall out of the current cluster at that split's lambda.
    """
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be at least 2")
    n = merges.shape[0] + 1
    root_h = 2 * n - 2

    def count(h: int) -> int:
        return 1 if h < n else int(merges[h - n, 3])

    parent = [-1]
    birth = [0.0]
    size = [n]
    death: dict[int, float] = {}
    point_cluster = np.full(n, -1, dtype=np.int64)
    point_lambda = np.zeros(n, dtype=np.float64)

    relabel = {root_h: 0}
    ignore = np.zeros(2 * n - 1, dtype=bool)
    queue = deque([root_h])
    visit: list[int] = []
    while queue:
        h = queue.popleft()
        visit.append(h)
        if h >= n:
            row = merges[h - n]
            queue.append(int(row[0]))
            queue.append(int(row[1]))

    def shed(node: int, h: int, lam: float) -> None:
        for p in _leaf_points(merges, h, n):
            point_cluster[p] = node
            point_lambda[p] = lam
        if h >= n:
            stack = [h]
            while stack:
                s = stack.pop()
                if s >= n:
                    ignore[s] = True
                    stack.append(int(merges[s - n, 0]))
                    stack.append(int(merges[s - n, 1]))

    for h in visit:
        if h < n or ignore[h]:
            continue
        node = relabel[h]
        left, right = int(merges[h - n, 0]), int(merges[h - n, 1])
        lam = lambda_of(merges[h - n, 2])
        big_left = count(left) >= min_cluster_size
        big_right = count(right) >= min_cluster_size
        if big_left and big_right:
            for child_h in (left, right):
                child = len(parent)
                parent.append(node)
                birth.append(lam)
                size.append(count(child_h))
                relabel[child_h] = child
            death[node] = lam
        elif big_left:
            relabel[left] = node
            shed(node, right, lam)
        elif big_right:
            relabel[right] = node
            shed(node, left, lam)
        else:
            shed(node, left, lam)
            shed(node, right, lam)

    assert np.all(point_cluster >= 0), "every point must fall out somewhere"
    m = len(parent)
    lambda_death = np.zeros(m, dtype=np.float64)
    for node, lam in death.items():
        lambda_death[node] = lam
    # Leaf nodes dissolve when their last points fall out.
    has_split = np.zeros(m, dtype=bool)
    has_split[list(death.keys())] = True
    for p in range(n):
        node = point_cluster[p]
        if not has_split[node] and point_lambda[p] > lambda_death[node]:
            lambda_death[node] = point_lambda[p]
    return CondensedTree(
        parent=np.asarray(parent, dtype=np.int64),
        lambda_birth=np.asarray(birth, dtype=np.float64),
        lambda_death=lambda_death,
        size=np.asarray(size, dtype=np.int64),
        point_cluster=point_cluster,
        point_lambda=point_lambda,
    )


def _depth_order(tree: CondensedTree) -> np.ndarray:
    """Node ids ordered so every child precedes its parent."""
    depth = np.zeros(tree.n_nodes, dtype=np.int64)
    for node in range(1, tree.n_nodes):
        depth[node] = depth[tree.parent[node]] + 1
    return np.argsort(-depth, kind="stable")


def stability_scores(tree: CondensedTree) -> np.ndarray:
    """Excess of mass per node: sum over the subtree's points of
    min(lambda(x), lambda_death) - lambda_birth.
    """
    stab = np.zeros(tree.n_nodes, dtype=np.float64)
    np.add.at(
        stab,
        tree.point_cluster,
        tree.point_lambda - tree.lambda_birth[tree.point_cluster],
    )
    for node in range(1, tree.n_nodes):
        up = tree.parent[node]
        stab[up] += (tree.lambda_birth[node] - tree.lambda_birth[up]) * tree.size[node]
    return stab


def select_clusters(tree: CondensedTree) -> ClusterSelection:
    """Pick non-nested clusters whose stability beats their children's.

    Equal stability keeps the children (the deeper nodes); the root is never
    selected, so a tree with no surviving split yields an all-noise result.
    """
    stab = stability_scores(tree)
    children = tree.children()
    is_selected = np.zeros(tree.n_nodes, dtype=bool)
    propagated = np.zeros(tree.n_nodes, dtype=np.float64)
    for node in _depth_order(tree):
        kids = children[node]
        if not kids:
            propagated[node] = stab[node]
            is_selected[node] = node != 0
            continue
        child_sum = sum(propagated[k] for k in kids)
        if node != 0 and stab[node] > child_sum:
            stack = list(kids)
            while stack:
                below = stack.pop()
                is_selected[below] = False
                stack.extend(children[below])
            is_selected[node] = True
            propagated[node] = stab[node]
        else:
            propagated[node] = child_sum

    selected = np.flatnonzero(is_selected)
    index_of = {int(node): i for i, node in enumerate(selected)}
    owner = np.full(tree.n_nodes, NOISE, dtype=np.int64)
    for node in _depth_order(tree)[::-1]:
        if int(node) in index_of:
            owner[node] = index_of[int(node)]
        elif tree.parent[node] >= 0:
            owner[node] = owner[tree.parent[node]]

    hard = owner[tree.point_cluster]
    probabilities = np.zeros(tree.n_points, dtype=np.float64)
    member = hard != NOISE
    if member.any():
        deaths = tree.lambda_death[selected[hard[member]]]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(deaths > 0, tree.point_lambda[member] / deaths, 1.0)
        probabilities[member] = np.clip(ratio, 0.0, 1.0)

    spans = tree.lambda_death[selected] - tree.lambda_birth[selected]
    sizes = tree.size[selected].astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        persistence = np.where(spans > 0, stab[selected] / (sizes * spans), 0.0)
    return ClusterSelection(
        selected=selected,
        hard_labels=hard,
        probabilities=probabilities,
        stabilities=stab[selected],
        persistence=np.clip(persistence, 0.0, 1.0),
    )


def glosh_scores(tree: CondensedTree, selection: ClusterSelection) -> np.ndarray:
    """(lambda_max - lambda(x)) / lambda_max per point, in [0, 1].

    lambda_max is the largest death value in the subtree of the point's
    selected cluster, or of its departure node for noise points, so members
    of one cluster share a common density ceiling.
    """
    subtree_max = tree.lambda_death.copy()
    for node in _depth_order(tree):
        up = tree.parent[node]
        if up >= 0 and subtree_max[node] > subtree_max[up]:
            subtree_max[up] = subtree_max[node]

    base = tree.point_cluster.copy()
    member = selection.hard_labels != NOISE
    base[member] = selection.selected[selection.hard_labels[member]]
    lam_max = subtree_max[base]
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(
            lam_max > 0,
            (lam_max - np.minimum(tree.point_lambda, lam_max)) / lam_max,
            1.0,
        )
    return np.clip(scores, 0.0, 1.0)


def dump_condensed_tree(tree: CondensedTree, path: str | Path) -> None:
    """Line-per-node debug dump: id, parent, lambda_birth, lambda_death, size."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for node in range(tree.n_nodes):
            handle.write(
                f"{node}\t{tree.parent[node]}\t{tree.lambda_birth[node]:.12g}"
                f"\t{tree.lambda_death[node]:.12g}\t{tree.size[node]}\n"
            )
