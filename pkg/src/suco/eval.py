"""Ground truth, recall / mean relative error, and SC-score rank profiles."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, QueryResult, as_query, sq_dists_to, top_k
from .errors import ConfigurationError, FormatError
from .io import read_vecs, write_vecs
from .sc_linear import compute_sc_scores
from .subspace import SubspaceLayout


def exact_knn(dataset: Dataset, q, k: int) -> QueryResult:
    """Exhaustive scan; ties by id. The reference for every recall number."""
    if not 1 <= k <= dataset.n:
        raise ConfigurationError(f"k must lie in [1, n={dataset.n}], got {k}")
    q = as_query(q, dataset.d)
    return top_k(np.arange(dataset.n), sq_dists_to(dataset.data, q), k)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    ids: np.ndarray  # (num_queries, k) int32
    distances: np.ndarray  # (num_queries, k) float64; float32-rounded when read from disk

    @property
    def k(self) -> int:
        return self.ids.shape[1]

    def __len__(self) -> int:
        return self.ids.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(
            self.distances, other.distances
        )

    def save(self, prefix) -> tuple[Path, Path]:
        ids_path, dist_path = truth_paths(prefix)
        write_vecs(ids_path, "i32", self.ids)
        write_vecs(dist_path, "f32", self.distances)
        return ids_path, dist_path

    @classmethod
    def load(cls, prefix) -> "GroundTruth":
        ids_path, dist_path = truth_paths(prefix)
        ids = read_vecs(ids_path, "i32")
        dists = read_vecs(dist_path, "f32") if dist_path.exists() else None
        if dists is not None and dists.shape != ids.shape:
            raise FormatError(f"{dist_path}: shape {dists.shape} does not match ids {ids.shape}")
        if dists is None:
            dists = np.full(ids.shape, np.nan)
        return cls(ids=ids, distances=dists.astype(np.float64))

    def with_exact_distances(self, dataset: Dataset, queries: np.ndarray) -> "GroundTruth":
        """Recompute distances in float64 from the stored ids.

        Truth files keep float32 distances; comparing those against float64
        results would give MRE values a few ulps below zero.
        """
        if len(queries) != len(self):
            raise ConfigurationError(f"{len(queries)} queries for {len(self)} truth rows")
        if self.ids.size and (self.ids.min() < 0 or self.ids.max() >= dataset.n):
            raise ConfigurationError("ground-truth id outside the dataset")
        dists = np.empty(self.ids.shape)
        for i, q in enumerate(queries):
            dists[i] = np.sqrt(sq_dists_to(dataset.data[self.ids[i]], as_query(q, dataset.d)))
        return GroundTruth(ids=self.ids, distances=dists)


def truth_paths(prefix) -> tuple[Path, Path]:
    """``foo`` or ``foo.ivecs`` -> (``foo.ivecs``, ``foo.fvecs``)."""
    p = Path(prefix)
    if p.suffix in (".ivecs", ".fvecs"):
        p = p.with_suffix("")
    return p.with_name(p.name + ".ivecs"), p.with_name(p.name + ".fvecs")


def ground_truth(dataset: Dataset, queries: np.ndarray, k: int = 100) -> GroundTruth:
    k = min(k, dataset.n)
    results = [exact_knn(dataset, q, k) for q in queries]
    return GroundTruth(
        ids=np.array([r.ids for r in results], dtype=np.int32).reshape(len(results), k),
        distances=np.array([r.distances for r in results], dtype=np.float64).reshape(len(results), k),
    )


def cached_ground_truth(dataset: Dataset, queries: np.ndarray, k: int, cache_dir) -> GroundTruth:
    """Ground truth keyed by dataset and query hashes; recomputed on a miss."""
    qhash = hashlib.sha256(np.ascontiguousarray(queries, dtype="<f4").tobytes()).hexdigest()
    prefix = Path(cache_dir) / f"gt_{dataset.digest()[:16]}_{qhash[:16]}_k{k}"
    if truth_paths(prefix)[0].exists():
        return GroundTruth.load(prefix)
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    gt = ground_truth(dataset, queries, k)
    gt.save(prefix)
    return gt


def recall(result_ids, truth_ids, k: int) -> float:
    """``|R & R*| / k`` with ``R*`` the first ``k`` true neighbors."""
    found = set(np.asarray(result_ids)[:k].tolist())
    return len(found & set(np.asarray(truth_ids)[:k].tolist())) / k


def mre(result_dists, truth_dists, k: int) -> float:
    """Mean over ranks of ``(d_i - d*_i) / d*_i``.

    Ranks whose true distance is 0 are dropped. If every rank is dropped the
    error is 0 when the result distances are all 0 too, else infinity.
    """
    got = np.asarray(result_dists, dtype=np.float64)[:k]
    ref = np.asarray(truth_dists, dtype=np.float64)[:k]
    if len(got) != k or len(ref) != k:
        raise ConfigurationError(f"need {k} distances on both sides, got {len(got)} and {len(ref)}")
    usable = ref > 0
    if not usable.any():
        return 0.0 if np.all(got == 0) else math.inf
    return float(np.mean((got[usable] - ref[usable]) / ref[usable]))


def mean_metrics(results: list[QueryResult], truth: GroundTruth, k: int) -> tuple[float, float]:
    """Average (recall, MRE) over a query set."""
    if truth.k < k:
        raise ConfigurationError(f"ground truth holds {truth.k} neighbors, need {k}")
    recalls = [recall(r.ids, truth.ids[i], k) for i, r in enumerate(results)]
    errors = [mre(r.distances, truth.distances[i], k) for i, r in enumerate(results)]
    return float(np.mean(recalls)), float(np.mean(errors))


@dataclass(frozen=True, eq=False)
class ScoreRankProfile:
    """``mean_scores[r]`` is the average SC-score of the (r+1)-th nearest neighbor."""

    mean_scores: np.ndarray
    num_subspaces: int
    num_queries: int

    def at_ranks(self, ranks) -> np.ndarray:
        """Values at 1-based ranks."""
        return self.mean_scores[np.asarray(ranks) - 1]

    def spearman(self) -> float:
        from scipy.stats import spearmanr

        ranks = np.arange(1, len(self.mean_scores) + 1)
        return float(spearmanr(ranks, self.mean_scores).statistic)


def log_spaced_ranks(n: int, count: int = 200) -> np.ndarray:
    """Distinct 1-based ranks spread logarithmically over ``1..n``, always including both ends."""
    return np.unique(np.round(np.geomspace(1, n, num=min(count, n))).astype(np.int64))


def score_rank_profile(dataset: Dataset, layout: SubspaceLayout, queries: np.ndarray,
                       alpha: float) -> ScoreRankProfile:
    total = np.zeros(dataset.n, dtype=np.float64)
    for q in queries:
        scores = compute_sc_scores(dataset, layout, q, alpha)
        dist = sq_dists_to(dataset.data, as_query(q, dataset.d))
        order = np.lexsort((np.arange(dataset.n), dist))
        total += scores[order]
    return ScoreRankProfile(
        mean_scores=total / max(len(queries), 1),
        num_subspaces=layout.num_subspaces,
        num_queries=len(queries),
    )
