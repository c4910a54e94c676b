"""Index-free subspace collision search.

Every point's SC-score is the number of subspaces in which it is among the
``collision_count(alpha, n)`` points nearest to the query. The points with
the highest scores are re-ranked by full-space distance. This is exact
brute force per subspace, so it serves as the quality reference for the
indexed search in :mod:`suco.query`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, QueryResult, as_query, smallest_ids, sq_dists_to, top_k
from .errors import ConfigurationError, ContractError
from .subspace import SubspaceLayout

# alpha*n and beta*n are products of decimal ratios; absorb binary rounding
# (0.29 * 100 == 28.999999999999996) before taking floor/ceil.
_EPS = 1e-9


def collision_count(alpha: float, n: int) -> int:
    """Collisions per subspace: ``max(1, floor(alpha * n))``."""
    return max(1, math.floor(alpha * n + _EPS))


def candidate_count(beta: float, n: int, k: int) -> int:
    """Points to re-rank: ``max(k, ceil(beta * n))``, capped at ``n``."""
    return min(n, max(k, math.ceil(beta * n - _EPS)))


@dataclass(frozen=True)
class CollisionParams:
    alpha: float = 0.05
    beta: float = 0.005
    k: int = 50

    def validate(self, n: int) -> "CollisionParams":
        if not 0 < self.alpha <= 1:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 < self.beta <= 1:
            raise ConfigurationError(f"beta must lie in (0, 1], got {self.beta}")
        if not 1 <= self.k <= n:
            raise ConfigurationError(f"k must lie in [1, n={n}], got {self.k}")
        return self


def compute_sc_scores(
    dataset: Dataset, layout: SubspaceLayout, q, alpha: float
) -> np.ndarray:
    """SC-score of every point, an int32 array with values in ``[0, N_s]``."""
    if layout.d != dataset.d:
        raise ContractError(f"layout d={layout.d} does not match dataset d={dataset.d}")
    if not 0 < alpha <= 1:
        raise ConfigurationError(f"alpha must lie in (0, 1], got {alpha}")
    q = as_query(q, dataset.d)
    m = collision_count(alpha, dataset.n)
    scores = np.zeros(dataset.n, dtype=np.int32)
    for dims in layout.subspaces:
        dist = sq_dists_to(dataset.data[:, dims], q[dims])
        scores[smallest_ids(dist, m)] += 1
    return scores


def select_candidates(scores: np.ndarray, m: int) -> np.ndarray:
    """The ``m`` highest-scoring ids; equal scores prefer the lower id."""
    return smallest_ids(-scores.astype(np.int64), m)


def rerank(dataset: Dataset, q, candidate_ids, k: int) -> QueryResult:
    """Exact top-``k`` among ``candidate_ids`` by full-space distance."""
    ids = np.asarray(candidate_ids, dtype=np.int64)
    if k > len(ids):
        raise ContractError(f"k={k} exceeds the {len(ids)} candidates")
    if len(ids) and (ids.min() < 0 or ids.max() >= dataset.n):
        raise ContractError("candidate id out of range")
    q = as_query(q, dataset.d)
    return top_k(ids, sq_dists_to(dataset.data[ids], q), k)


def sc_linear_query(
    dataset: Dataset, layout: SubspaceLayout, q, params: CollisionParams
) -> QueryResult:
    params.validate(dataset.n)
    scores = compute_sc_scores(dataset, layout, q, params.alpha)
    m = candidate_count(params.beta, dataset.n, params.k)
    return rerank(dataset, q, select_candidates(scores, m), params.k)
