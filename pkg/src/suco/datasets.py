"""Seeded synthetic corpora for tests and desk-scale benchmarks."""

from __future__ import annotations

import numpy as np


def uniform(n: int, d: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).random((n, d), dtype=np.float32)


def gaussian_clusters(n: int, d: int, clusters: int = 8, spread: float = 1.0,
                      separation: float = 10.0, seed: int = 0) -> np.ndarray:
    """Isotropic blobs with centers drawn from ``N(0, separation^2)``."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, separation, size=(clusters, d))
    labels = rng.integers(clusters, size=n)
    return (centers[labels] + rng.normal(0.0, spread, size=(n, d))).astype(np.float32)


def sift_like(n: int, d: int = 128, clusters: int = 64, latent: int = 16,
              seed: int = 0) -> np.ndarray:
    """Non-negative, integer-valued vectors shaped like SIFT descriptors.

    Points are cluster prototypes plus a ``latent``-dimensional linear
    factor and a little isotropic noise, clipped to [0, 255] and rounded.
    The low-rank factor keeps the intrinsic dimension far below ``d``, as
    in real descriptor corpora.
    """
    rng = np.random.default_rng(seed)
    protos = rng.gamma(shape=0.7, scale=25.0, size=(clusters, d))
    mixing = rng.normal(0.0, 6.0, size=(latent, d))
    labels = rng.integers(clusters, size=n)
    factors = rng.normal(size=(n, latent))
    x = protos[labels] + factors @ mixing + rng.normal(0.0, 3.0, size=(n, d))
    return np.clip(np.round(x), 0, 255).astype(np.float32)
