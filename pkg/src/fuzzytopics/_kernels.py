"""Numba kernels for the numerical hot paths.

Every kernel keeps fastmath disabled and reduces either sequentially or
per row, so results are bit-identical regardless of the thread count.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

_LOG2E = 1.4426950408889634


@njit(parallel=True, fastmath=False, cache=True)
def conditional_probs(sq_distances, target_bits, tol, max_iter):
    """Per-row Gaussian conditionals whose entropy (bits) matches the target.

    Bandwidths are found by bisection on the precision beta; each row is
    independent, so the parallel loop cannot change the result.
    """
    n = sq_distances.shape[0]
    probs = np.zeros((n, n), dtype=np.float64)
    for i in prange(n):
        row = sq_distances[i]
        shift = np.inf
        for j in range(n):
            if j != i and row[j] < shift:
                shift = row[j]
        beta = 1.0
        beta_lo = 0.0
        beta_hi = 0.0
        has_lo = False
        has_hi = False
        for _ in range(max_iter):
            sum_p = 0.0
            sum_dp = 0.0
            for j in range(n):
                if j != i:
                    e = math.exp(-beta * (row[j] - shift))
                    sum_p += e
                    sum_dp += (row[j] - shift) * e
            entropy = (math.log(sum_p) + beta * sum_dp / sum_p) * _LOG2E
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
        for j in range(n):
            if j != i:
                e = math.exp(-beta * (row[j] - shift))
                probs[i, j] = e
                sum_p += e
        inv = 1.0 / sum_p
        for j in range(n):
            if j != i:
                probs[i, j] *= inv
    return probs


@njit(parallel=True, fastmath=False, cache=True)
def _student_t_row_sums(coords):
    n = coords.shape[0]
    sums = np.empty(n, dtype=np.float64)
    for i in prange(n):
        yi0 = coords[i, 0]
        yi1 = coords[i, 1]
        acc = 0.0
        for j in range(n):
            if j != i:
                d0 = yi0 - coords[j, 0]
                d1 = yi1 - coords[j, 1]
                acc += 1.0 / (1.0 + d0 * d0 + d1 * d1)
        sums[i] = acc
    return sums


@njit(parallel=True, fastmath=False, cache=True)
def _grad_rows(affinities, coords, inv_z):
    n = coords.shape[0]
    grad = np.empty((n, 2), dtype=np.float64)
    for i in prange(n):
        yi0 = coords[i, 0]
        yi1 = coords[i, 1]
        g0 = 0.0
        g1 = 0.0
        for j in range(n):
            if j != i:
                d0 = yi0 - coords[j, 0]
                d1 = yi1 - coords[j, 1]
                w = 1.0 / (1.0 + d0 * d0 + d1 * d1)
                coeff = (affinities[i, j] - w * inv_z) * w
                g0 += coeff * d0
                g1 += coeff * d1
        grad[i, 0] = 4.0 * g0
        grad[i, 1] = 4.0 * g1
    return grad


def kl_gradient(affinities, coords):
    """Exact t-SNE gradient; the q normalizer is summed in a fixed order."""
    row_sums = _student_t_row_sums(coords)
    z = float(np.sum(row_sums))
    return _grad_rows(affinities, coords, 1.0 / z)


@njit(fastmath=False, cache=True)
def prim_mst(weights):
    """Minimum spanning tree of a dense weight matrix, edges in build order."""
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=np.bool_)
    key = np.full(n, np.inf, dtype=np.float64)
    parent = np.full(n, -1, dtype=np.int64)
    edges = np.empty((n - 1, 3), dtype=np.float64)
    key[0] = 0.0
    for step in range(n):
        best = -1
        best_key = np.inf
        for v in range(n):
            if not in_tree[v] and key[v] < best_key:
                best_key = key[v]
                best = v
        in_tree[best] = True
        if step > 0:
            a = parent[best]
            b = best
            if a > b:
                a, b = b, a
            edges[step - 1, 0] = a
            edges[step - 1, 1] = b
            edges[step - 1, 2] = key[best]
        for u in range(n):
            if not in_tree[u] and weights[best, u] < key[u]:
                key[u] = weights[best, u]
                parent[u] = best
    return edges
