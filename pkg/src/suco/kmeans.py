"""Seeded k-means++ followed by a fixed number of Lloyd iterations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import pairwise_sq_dists
from .errors import ConfigurationError


@dataclass(eq=False)
class KMeansModel:
    centroids: np.ndarray  # (k_half, dim) float32
    assignments: np.ndarray  # (n,) int32
    wcss_history: list[float] = field(default_factory=list)
    repairs: int = 0

    @property
    def k_half(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, KMeansModel):
            return NotImplemented
        return np.array_equal(self.centroids, other.centroids) and np.array_equal(
            self.assignments, other.assignments
        )


def assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per point; argmin keeps the lowest id on ties."""
    d2 = pairwise_sq_dists(points, centroids)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int32), d2[np.arange(len(labels)), labels]


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    x = points.astype(np.float64)
    chosen = [int(rng.integers(n))]
    closest = pairwise_sq_dists(x, x[chosen[0]][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a chosen center
            nxt = int(rng.integers(n))
        chosen.append(nxt)
        np.minimum(closest, pairwise_sq_dists(x, x[nxt][None, :])[:, 0], out=closest)
    return x[chosen]


def kmeans(points: np.ndarray, k_half: int, t: int = 10, seed: int = 0) -> KMeansModel:
    """Cluster ``points`` into ``k_half`` cells.

    Runs k-means++ seeding, then exactly ``t`` rounds of (assign, update). A
    final assignment against the returned centroids makes labels and
    centroids mutually consistent. A cluster that empties during an update
    is reseeded at the point currently worst served by its own centroid.

    ``wcss_history`` holds the within-cluster sum of squares after each
    assignment step, ``t + 1`` values in total; it never increases.
    """
    points = np.asarray(points)
    if points.ndim != 2:
        raise ConfigurationError(f"points must be 2-d, got shape {points.shape}")
    n = points.shape[0]
    if k_half < 1 or n < k_half:
        raise ConfigurationError(f"need n >= k_half >= 1, got n={n}, k_half={k_half}")
    if t < 1:
        raise ConfigurationError(f"iteration count must be >= 1, got {t}")

    x = points.astype(np.float64)
    rng = np.random.default_rng(seed)
    centroids = kmeans_plus_plus(x, k_half, rng).astype(np.float32).astype(np.float64)
    history: list[float] = []
    repairs = 0

    for _ in range(t):
        labels, best = assign(x, centroids)
        history.append(float(best.sum()))
        counts = np.bincount(labels, minlength=k_half)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, x)
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        if len(empty):
            # stable sort on -best: farthest first, lowest point id on ties
            worst = np.argsort(-best, kind="stable")[: len(empty)]
            centroids[empty] = x[worst]
            repairs += len(empty)
        # keep centroids float32-representable so the returned model is the one labels refer to
        centroids = centroids.astype(np.float32).astype(np.float64)

    labels, best = assign(x, centroids)
    history.append(float(best.sum()))
    return KMeansModel(
        centroids=centroids.astype(np.float32),
        assignments=labels,
        wcss_history=history,
        repairs=repairs,
    )
