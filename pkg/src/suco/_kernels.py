"""Compiled IMI traversal loops (numba), mirroring the reference versions in query.py.

Inputs are the two sorted distance arrays, the centroid orders and the flat
cell-size table. Each kernel returns ``(rank1, rank2, sums, cumulative)``
arrays trimmed to the number of retrieved cells.
"""

from __future__ import annotations

import heapq

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not args or not callable(args[0]) else args[0]


@njit(cache=True)
def dynamic_activation_kernel(d1, d2, o1, o2, sizes, k, target):
    cap = k * k
    r1 = np.empty(cap, np.int64)
    r2 = np.empty(cap, np.int64)
    sums = np.empty(cap, np.float64)
    cum = np.empty(cap, np.int64)
    active_idx = np.zeros(k, np.int64)
    active_dists = np.full(k, np.inf)
    active_dists[0] = d1[0] + d2[0]
    n_active = 1
    count = 0
    m = 0
    while True:
        pos = 0
        best = active_dists[0]
        for r in range(1, n_active):
            if active_dists[r] < best:
                best = active_dists[r]
                pos = r
        if best == np.inf:
            break
        j = active_idx[pos]
        count += sizes[o1[pos] * k + o2[j]]
        r1[m] = pos
        r2[m] = j
        sums[m] = best
        cum[m] = count
        m += 1
        if count >= target:
            break
        if j == 0 and pos < k - 1:
            active_dists[pos + 1] = d1[pos + 1] + d2[0]
            n_active += 1
        if j < k - 1:
            active_idx[pos] = j + 1
            active_dists[pos] = d1[pos] + d2[j + 1]
        else:
            active_dists[pos] = np.inf
    return r1[:m], r2[:m], sums[:m], cum[:m]


@njit(cache=True)
def multi_sequence_kernel(d1, d2, o1, o2, sizes, k, target):
    cap = k * k
    r1 = np.empty(cap, np.int64)
    r2 = np.empty(cap, np.int64)
    sums = np.empty(cap, np.float64)
    cum = np.empty(cap, np.int64)
    pushed = np.zeros(cap, np.bool_)
    pushed[0] = True
    heap = [(d1[0] + d2[0], 0, 0)]
    count = 0
    m = 0
    while len(heap) > 0:
        s, i, j = heapq.heappop(heap)
        count += sizes[o1[i] * k + o2[j]]
        r1[m] = i
        r2[m] = j
        sums[m] = s
        cum[m] = count
        m += 1
        if count >= target:
            break
        if i + 1 < k and not pushed[(i + 1) * k + j]:
            pushed[(i + 1) * k + j] = True
            heapq.heappush(heap, (d1[i + 1] + d2[j], i + 1, j))
        if j + 1 < k and not pushed[i * k + j + 1]:
            pushed[i * k + j + 1] = True
            heapq.heappush(heap, (d1[i] + d2[j + 1], i, j + 1))
    return r1[:m], r2[:m], sums[:m], cum[:m]
