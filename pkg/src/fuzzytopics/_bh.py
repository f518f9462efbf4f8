"""Barnes-Hut machinery: k-NN sparse affinities and quadtree repulsion.

The quadtree is built by sequential insertion in point order and traversed
per point, so results are deterministic for a fixed theta; runs with
different theta values are different approximations by design.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

_MAX_DEPTH = 52


@njit(parallel=True, fastmath=False, cache=True)
def conditional_probs_knn(neighbor_sq_distances, target_bits, tol, max_iter):
    """Per-row Gaussian conditionals over each point's neighbor list."""
    n, k = neighbor_sq_distances.shape
    probs = np.zeros((n, k), dtype=np.float64)
    log2e = 1.4426950408889634
    for i in prange(n):
        row = neighbor_sq_distances[i]
        shift = row.min()
        beta = 1.0
        beta_lo = 0.0
        beta_hi = 0.0
        has_lo = False
        has_hi = False
        for _ in range(max_iter):
            sum_p = 0.0
            sum_dp = 0.0
            for j in range(k):
                e = math.exp(-beta * (row[j] - shift))
                sum_p += e
                sum_dp += (row[j] - shift) * e
            entropy = (math.log(sum_p) + beta * sum_dp / sum_p) * log2e
            diff = entropy - target_bits
            if abs(diff) < tol:
                break
            if diff > 0.0:
                beta_lo = beta
                has_lo = True
                beta = beta * 2.0 if not has_hi else 0.5 * (beta + beta_hi)
            else:
                beta_hi = beta
                has_hi = True
                beta = beta * 0.5 if not has_lo else 0.5 * (beta + beta_lo)
        sum_p = 0.0
        for j in range(k):
            e = math.exp(-beta * (row[j] - shift))
            probs[i, j] = e
            sum_p += e
        inv = 1.0 / sum_p
        for j in range(k):
            probs[i, j] *= inv
    return probs


def sparse_joint_affinities(neighbor_index, conditional):
    """Symmetrize conditional k-NN affinities into CSR arrays summing to 1."""
    n, k = neighbor_index.shape
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = neighbor_index.reshape(-1).astype(np.int64)
    vals = conditional.reshape(-1) / (2.0 * n)
    # add the transpose, then coalesce duplicate (i, j) pairs
    all_rows = np.concatenate([rows, cols])
    all_cols = np.concatenate([cols, rows])
    all_vals = np.concatenate([vals, vals])
    key = all_rows * n + all_cols
    order = np.argsort(key, kind="stable")
    key = key[order]
    all_vals = all_vals[order]
    boundaries = np.flatnonzero(np.diff(key)) + 1
    starts = np.concatenate([[0], boundaries])
    summed = np.add.reduceat(all_vals, starts)
    unique_key = key[starts]
    out_rows = (unique_key // n).astype(np.int64)
    out_cols = (unique_key % n).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, out_rows + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, out_cols, summed


@njit(parallel=True, fastmath=False, cache=True)
def attraction(indptr, indices, data, coords):
    """Per-point attractive force sum p_ij w_ij (y_i - y_j)."""
    n = coords.shape[0]
    out = np.zeros((n, 2), dtype=np.float64)
    for i in prange(n):
        yi0 = coords[i, 0]
        yi1 = coords[i, 1]
        a0 = 0.0
        a1 = 0.0
        for idx in range(indptr[i], indptr[i + 1]):
            j = indices[idx]
            d0 = yi0 - coords[j, 0]
            d1 = yi1 - coords[j, 1]
            w = 1.0 / (1.0 + d0 * d0 + d1 * d1)
            a0 += data[idx] * w * d0
            a1 += data[idx] * w * d1
        out[i, 0] = a0
        out[i, 1] = a1
    return out


@njit(fastmath=False, cache=True)
def build_quadtree(coords, capacity):
    """Array-backed quadtree: children, per-cell count, and center of mass.

    Returns (children, counts, mass_x, mass_y, point_of, cx, cy, half,
    n_nodes, ok). A leaf holding one point stores it in point_of; duplicate
    or depth-capped points accumulate into the cell aggregate.
    """
    n = coords.shape[0]
    children = np.full((capacity, 4), -1, dtype=np.int64)
    counts = np.zeros(capacity, dtype=np.int64)
    mass_x = np.zeros(capacity, dtype=np.float64)
    mass_y = np.zeros(capacity, dtype=np.float64)
    point_of = np.full(capacity, -1, dtype=np.int64)
    cx = np.zeros(capacity, dtype=np.float64)
    cy = np.zeros(capacity, dtype=np.float64)
    half = np.zeros(capacity, dtype=np.float64)

    xmin = coords[:, 0].min()
    xmax = coords[:, 0].max()
    ymin = coords[:, 1].min()
    ymax = coords[:, 1].max()
    span = max(xmax - xmin, ymax - ymin)
    if span <= 0.0:
        span = 1e-9
    cx[0] = 0.5 * (xmin + xmax)
    cy[0] = 0.5 * (ymin + ymax)
    half[0] = 0.5 * span * 1.0000001
    n_nodes = 1

    for p in range(n):
        x = coords[p, 0]
        y = coords[p, 1]
        node = 0
        depth = 0
        while True:
            counts[node] += 1
            mass_x[node] += x
            mass_y[node] += y
            is_leaf = (
                children[node, 0] < 0
                and children[node, 1] < 0
                and children[node, 2] < 0
                and children[node, 3] < 0
            )
            if is_leaf and counts[node] == 1:
                point_of[node] = p
                break
            if is_leaf and depth >= _MAX_DEPTH:
                break  # aggregate duplicates at the depth cap
            if is_leaf:
                # split: push the resident point one level down
                resident = point_of[node]
                point_of[node] = -1
                rx = coords[resident, 0]
                ry = coords[resident, 1]
                quad = (1 if rx >= cx[node] else 0) + (2 if ry >= cy[node] else 0)
                if n_nodes + 4 > capacity:
                    return children, counts, mass_x, mass_y, point_of, cx, cy, half, n_nodes, False
                for q in range(4):
                    child = n_nodes + q
                    children[node, q] = child
                    h = 0.5 * half[node]
                    cx[child] = cx[node] + (h if q & 1 else -h)
                    cy[child] = cy[node] + (h if q & 2 else -h)
                    half[child] = h
                n_nodes += 4
                target = children[node, quad]
                counts[target] = 1
                mass_x[target] = rx
                mass_y[target] = ry
                point_of[target] = resident
            quad = (1 if x >= cx[node] else 0) + (2 if y >= cy[node] else 0)
            node = children[node, quad]
            depth += 1
    return children, counts, mass_x, mass_y, point_of, cx, cy, half, n_nodes, True


@njit(parallel=True, fastmath=False, cache=True)
def repulsion(coords, children, counts, mass_x, mass_y, point_of, cx, cy, half, theta):
    """Barnes-Hut repulsive numerators and the normalizer contributions.

    Returns (rep, z_rows) where rep[i] approximates sum_j w^2 (y_i - y_j)
    and z_rows[i] approximates sum_j w_ij, skipping j = i when it occupies
    its own leaf.
    """
    n = coords.shape[0]
    rep = np.zeros((n, 2), dtype=np.float64)
    z_rows = np.zeros(n, dtype=np.float64)
    theta2 = theta * theta
    for i in prange(n):
        yi0 = coords[i, 0]
        yi1 = coords[i, 1]
        stack = np.empty(256, dtype=np.int64)
        stack[0] = 0
        top = 1
        r0 = 0.0
        r1 = 0.0
        z = 0.0
        while top > 0:
            top -= 1
            node = stack[top]
            cnt = counts[node]
            if cnt == 0:
                continue
            if cnt == 1 and point_of[node] == i:
                continue
            com_x = mass_x[node] / cnt
            com_y = mass_y[node] / cnt
            d0 = yi0 - com_x
            d1 = yi1 - com_y
            dist2 = d0 * d0 + d1 * d1
            size = 2.0 * half[node]
            is_leaf = children[node, 0] < 0
            if is_leaf or size * size < theta2 * dist2:
                w = 1.0 / (1.0 + dist2)
                z += cnt * w
                coef = cnt * w * w
                r0 += coef * d0
                r1 += coef * d1
            else:
                for q in range(4):
                    child = children[node, q]
                    if child >= 0 and counts[child] > 0:
                        stack[top] = child
                        top += 1
        rep[i, 0] = r0
        rep[i, 1] = r1
        z_rows[i] = z
    return rep, z_rows


def quadtree(coords):
    """Build the tree, growing the node buffer if the first guess is small.

    Returns the argument pack `repulsion` expects after the coordinates.
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    capacity = 8 * coords.shape[0] + 64
    while True:
        built = build_quadtree(coords, capacity)
        if built[-1]:
            return built[:8]
        capacity *= 2
