"""Collision counting over the inverted multi-index and the k-ANN query.

Two traversals enumerate IMI cells in non-decreasing order of
``dist1[c1] + dist2[c2]`` until the retrieved cells hold at least
``collision_count(alpha, n)`` points:

* :func:`dynamic_activation` keeps one cursor per first-half rank and
  activates the next rank lazily; no heap is involved.
* :func:`multi_sequence` is the classic best-first walk with a heap.

Both order equal sums by (first-half rank, second-half rank), so they
produce identical sequences, not merely identical sets.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .core import Dataset, QueryResult, as_query
from .errors import ContractError
from .index import Imi, SucoIndex
from .sc_linear import (
    CollisionParams,
    candidate_count,
    collision_count,
    rerank,
    select_candidates,
)


@dataclass(frozen=True, eq=False)
class CentroidDistances:
    """Euclidean distances from one projected query half to its centroids."""

    dists: np.ndarray  # (k_half,) float64
    order: np.ndarray  # argsort of dists, ties by centroid id

    @classmethod
    def from_values(cls, dists) -> "CentroidDistances":
        dists = np.asarray(dists, dtype=np.float64)
        return cls(dists=dists, order=np.argsort(dists, kind="stable"))

    @classmethod
    def compute(cls, centroids: np.ndarray, q_half: np.ndarray) -> "CentroidDistances":
        diff = centroids.astype(np.float64) - q_half.astype(np.float64)
        return cls.from_values(np.sqrt(np.einsum("ij,ij->i", diff, diff)))

    @property
    def sorted_dists(self) -> np.ndarray:
        return self.dists[self.order]


@dataclass(eq=False)
class RetrievedClusters:
    """Cells in retrieval order, with the running point count."""

    ranks: list[tuple[int, int]] = field(default_factory=list)
    cells: list[tuple[int, int]] = field(default_factory=list)
    sums: list[float] = field(default_factory=list)
    cumulative: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.cells)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RetrievedClusters):
            return NotImplemented
        return (self.ranks == other.ranks and self.cells == other.cells
                and self.sums == other.sums and self.cumulative == other.cumulative)

    @property
    def retrieved(self) -> int:
        return self.cumulative[-1] if self.cumulative else 0

    def point_ids(self, imi: Imi) -> np.ndarray:
        flat = [c1 * imi.k_half + c2 for c1, c2 in self.cells]
        return imi.gather(np.array(flat, dtype=np.int64))


def _prepare(alpha, n, cd1, cd2, imi):
    k = imi.k_half
    if len(cd1.dists) != k or len(cd2.dists) != k:
        raise ContractError(f"centroid distances do not match k_half={k}")
    if not 0 < alpha <= 1:
        raise ContractError(f"alpha must lie in (0, 1], got {alpha}")
    return (
        k,
        collision_count(alpha, n),
        imi.sizes.tolist(),
        cd1.order.tolist(),
        cd2.order.tolist(),
        cd1.sorted_dists.tolist(),
        cd2.sorted_dists.tolist(),
    )


def dynamic_activation(alpha: float, n: int, cd1: CentroidDistances,
                       cd2: CentroidDistances, imi: Imi,
                       check_frontier: bool = False) -> RetrievedClusters:
    """Retrieve cells without a priority queue.

    Row ``r`` (the r-th closest first-half centroid) holds a cursor into
    the second half's sorted order. Row ``r + 1`` is activated only when row
    ``r`` retrieves its cursor-0 cell, so active rows always form a prefix
    and the smallest active entry is the global next cell. Exhausted rows
    hold +inf. ``check_frontier`` re-verifies that property after every
    step against all unretrieved cells (quadratic; for tests).
    """
    k, target, sizes, o1, o2, d1, d2 = _prepare(alpha, n, cd1, cd2, imi)
    out = RetrievedClusters()
    active_idx = [0] * k
    active_dists = np.full(k, np.inf)
    active_dists[0] = d1[0] + d2[0]
    n_active = 1
    count = 0
    done = np.zeros((k, k), dtype=bool) if check_frontier else None

    while True:
        pos = int(np.argmin(active_dists[:n_active]))
        s = float(active_dists[pos])
        if s == np.inf:
            break  # every cell retrieved; only reachable if the IMI holds < target points
        j = active_idx[pos]
        c1, c2 = o1[pos], o2[j]
        count += sizes[c1 * k + c2]
        out.ranks.append((pos, j))
        out.cells.append((c1, c2))
        out.sums.append(s)
        out.cumulative.append(count)
        if done is not None:
            done[pos, j] = True
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
        if done is not None:
            _assert_frontier(active_dists, done, d1, d2)
    return out


def _assert_frontier(active_dists, done, d1, d2) -> None:
    sums = np.add.outer(np.asarray(d1), np.asarray(d2))
    remaining = sums[~done]
    best = remaining.min() if remaining.size else np.inf
    assert active_dists.min() == best, "frontier invariant violated"


def multi_sequence(alpha: float, n: int, cd1: CentroidDistances,
                   cd2: CentroidDistances, imi: Imi) -> RetrievedClusters:
    """Best-first cell walk with a heap keyed on (sum, rank1, rank2)."""
    k, target, sizes, o1, o2, d1, d2 = _prepare(alpha, n, cd1, cd2, imi)
    out = RetrievedClusters()
    heap = [(d1[0] + d2[0], 0, 0)]
    pushed = bytearray(k * k)
    pushed[0] = 1
    count = 0
    while heap:
        s, i, j = heapq.heappop(heap)
        c1, c2 = o1[i], o2[j]
        count += sizes[c1 * k + c2]
        out.ranks.append((i, j))
        out.cells.append((c1, c2))
        out.sums.append(s)
        out.cumulative.append(count)
        if count >= target:
            break
        if i + 1 < k and not pushed[(i + 1) * k + j]:
            pushed[(i + 1) * k + j] = 1
            heapq.heappush(heap, (d1[i + 1] + d2[j], i + 1, j))
        if j + 1 < k and not pushed[i * k + j + 1]:
            pushed[i * k + j + 1] = 1
            heapq.heappush(heap, (d1[i] + d2[j + 1], i, j + 1))
    return out


TRAVERSALS: dict[str, Callable[..., RetrievedClusters]] = {
    "dynamic_activation": dynamic_activation,
    "multi_sequence": multi_sequence,
}
KERNELS = {
    "dynamic_activation": _kernels.dynamic_activation_kernel,
    "multi_sequence": _kernels.multi_sequence_kernel,
}
ENGINES = ("auto", "python", "numba")


def _resolve_engine(engine: str) -> str:
    if engine not in ENGINES:
        raise ContractError(f"engine must be one of {ENGINES}, got {engine!r}")
    if engine == "auto":
        return "numba" if _kernels.NUMBA_AVAILABLE else "python"
    return engine


def _kernel_ranks(traversal: str, alpha: float, n: int, cd1: CentroidDistances,
                  cd2: CentroidDistances, imi: Imi):
    if not 0 < alpha <= 1:
        raise ContractError(f"alpha must lie in (0, 1], got {alpha}")
    return KERNELS[traversal](
        cd1.sorted_dists, cd2.sorted_dists, cd1.order, cd2.order,
        imi.sizes, imi.k_half, collision_count(alpha, n),
    )


def traverse(alpha: float, n: int, cd1: CentroidDistances, cd2: CentroidDistances,
             imi: Imi, traversal: str = "dynamic_activation",
             engine: str = "auto") -> RetrievedClusters:
    """Run either traversal on either engine; all four combinations agree."""
    if _resolve_engine(engine) == "python":
        return TRAVERSALS[traversal](alpha, n, cd1, cd2, imi)
    r1, r2, sums, cum = _kernel_ranks(traversal, alpha, n, cd1, cd2, imi)
    ranks = list(zip(r1.tolist(), r2.tolist()))
    return RetrievedClusters(
        ranks=ranks,
        cells=list(zip(cd1.order[r1].tolist(), cd2.order[r2].tolist())),
        sums=sums.tolist(),
        cumulative=cum.tolist(),
    )


def sc_scores(index: SucoIndex, q: np.ndarray, alpha: float,
              traversal: str = "dynamic_activation", engine: str = "auto") -> np.ndarray:
    """Indexed SC-scores: one vote per subspace for every point in a retrieved cell."""
    engine = _resolve_engine(engine)
    layout = index.layout
    k = index.k_half
    scores = np.zeros(index.n, dtype=np.int32)
    for i, part in enumerate(index.parts):
        cd1 = CentroidDistances.compute(part.first.centroids, q[layout.dims(i, "first")])
        cd2 = CentroidDistances.compute(part.second.centroids, q[layout.dims(i, "second")])
        if engine == "python":
            ids = TRAVERSALS[traversal](alpha, index.n, cd1, cd2, part.imi).point_ids(part.imi)
        else:
            r1, r2, _, _ = _kernel_ranks(traversal, alpha, index.n, cd1, cd2, part.imi)
            ids = part.imi.gather(cd1.order[r1] * k + cd2.order[r2])
        # cells partition the ids, so no id repeats within one subspace
        scores[ids] += 1
    return scores


def knn_query(index: SucoIndex, dataset: Dataset, q, params: CollisionParams,
              traversal: str = "dynamic_activation", engine: str = "auto") -> QueryResult:
    index.check_compatible(dataset)
    params.validate(dataset.n)
    q = as_query(q, dataset.d)
    scores = sc_scores(index, q, params.alpha, traversal, engine)
    m = candidate_count(params.beta, dataset.n, params.k)
    return rerank(dataset, q, select_candidates(scores, m), params.k)


def batch_query(fn: Callable[[np.ndarray], QueryResult], queries: np.ndarray,
                threads: int = 1) -> list[QueryResult]:
    """Apply a per-query function to every row; results keep row order."""
    if threads <= 1:
        return [fn(q) for q in queries]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, queries))
