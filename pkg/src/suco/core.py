"""Dataset and result containers plus the Euclidean distance kernels.

Vectors are stored as float32. Every distance is accumulated in float64 so
that different kernels agree on comparisons.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ContractError


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable ``n x d`` float32 matrix; point ids are row numbers."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ContractError(f"dataset must be 2-d, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ContractError(f"dataset needs n >= 1 and d >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ContractError("dataset contains non-finite components")
        if arr is self.data:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i):
        return self.data[i]

    def digest(self) -> str:
        """Hex sha256 over shape and raw bytes; identifies a corpus in reports."""
        h = hashlib.sha256()
        h.update(np.array(self.data.shape, dtype="<u8").tobytes())
        h.update(self.data.astype("<f4", copy=False).tobytes())
        return h.hexdigest()


def as_query(q, d: int) -> np.ndarray:
    """Validate a query vector against dimensionality ``d``."""
    arr = np.asarray(q, dtype=np.float32).reshape(-1)
    if arr.shape[0] != d:
        raise ContractError(f"query has {arr.shape[0]} components, dataset has d={d}")
    if not np.isfinite(arr).all():
        raise ContractError("query contains non-finite components")
    return arr


@dataclass(frozen=True, eq=False)
class QueryResult:
    """Neighbors sorted by (distance, id), distances are true Euclidean."""

    ids: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return zip(self.ids.tolist(), self.distances.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, QueryResult):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(
            self.distances, other.distances
        )

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(self)


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ContractError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def sq_euclidean(a, b) -> float:
    a, b = _check_pair(a, b)
    diff = a - b
    return float(np.dot(diff, diff))


def euclidean(a, b) -> float:
    return float(np.sqrt(sq_euclidean(a, b)))


def sq_dists_to(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Squared distance from every row of ``points`` to ``q`` (float64)."""
    points = np.asarray(points)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if points.ndim != 2 or points.shape[1] != q.shape[0]:
        raise ContractError(f"shape mismatch: points {points.shape}, query {q.shape}")
    diff = points.astype(np.float64) - q
    return np.einsum("ij,ij->i", diff, diff)


def pairwise_sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``|x_i - c_j|^2`` for all pairs via the norm expansion, clipped at 0.

    Used for k-means assignment where ``n x k`` explicit differences would be
    too costly; the float64 expansion keeps absolute error near 1e-10 for
    SIFT-range data.
    """
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if x.shape[1] != c.shape[1]:
        raise ContractError(f"dimension mismatch: {x.shape[1]} vs {c.shape[1]}")
    xx = np.einsum("ij,ij->i", x, x)[:, None]
    cc = np.einsum("ij,ij->i", c, c)[None, :]
    out = xx - 2.0 * (x @ c.T) + cc
    np.maximum(out, 0.0, out=out)
    return out


def smallest_ids(values: np.ndarray, m: int) -> np.ndarray:
    """Indices of the ``m`` smallest values, ties going to the lower index.

    The returned indices are in ascending index order, not value order.
    """
    values = np.asarray(values)
    size = values.shape[0]
    if m >= size:
        return np.arange(size)
    if m <= 0:
        return np.empty(0, dtype=np.intp)
    kth = np.partition(values, m - 1)[m - 1]
    below = values < kth
    need = m - int(below.sum())
    ties = np.flatnonzero(values == kth)[:need]
    below[ties] = True
    return np.flatnonzero(below)


def top_k(ids: np.ndarray, sq_dists: np.ndarray, k: int) -> QueryResult:
    """Best ``k`` of the given (id, squared distance) pairs, sorted by (dist, id)."""
    ids = np.asarray(ids, dtype=np.int64)
    sq_dists = np.asarray(sq_dists, dtype=np.float64)
    if ids.shape[0] > k:
        # smallest_ids breaks ties by position, so order by id first
        by_id = np.argsort(ids, kind="stable")
        ids, sq_dists = ids[by_id], sq_dists[by_id]
        keep = smallest_ids(sq_dists, k)
        ids, sq_dists = ids[keep], sq_dists[keep]
    order = np.lexsort((ids, sq_dists))
    return QueryResult(ids=ids[order], distances=np.sqrt(sq_dists[order]))
