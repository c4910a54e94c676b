import math

import numpy as np
import pytest

from suco.core import Dataset, QueryResult
from suco.datasets import gaussian_clusters
from suco.errors import ConfigurationError
from suco.eval import (
    GroundTruth,
    cached_ground_truth,
    exact_knn,
    ground_truth,
    log_spaced_ranks,
    mean_metrics,
    mre,
    recall,
    score_rank_profile,
)
from suco.subspace import sample_subspaces


def quadratic_knn(data, q, k):
    """Pure-Python scan, independent of the vectorized path."""
    rows = []
    for i, row in enumerate(data):
        s = 0.0
        for x, y in zip(row.tolist(), q.tolist()):
            s += (x - y) ** 2
        rows.append((s, i))
    rows.sort()
    return [i for _, i in rows[:k]], [math.sqrt(s) for s, _ in rows[:k]]


def test_exact_knn_small_example():
    ds = Dataset(np.array([[0, 0], [3, 4], [1, 0], [0, 1]], dtype=np.float32))
    res = exact_knn(ds, [0, 0], 3)
    assert res.ids.tolist() == [0, 2, 3]
    np.testing.assert_array_equal(res.distances, [0, 1, 1])


def test_exact_knn_matches_quadratic_scan(rng):
    data = rng.integers(-3, 4, size=(100, 2)).astype(np.float32)
    ds = Dataset(data)
    for _ in range(10):
        q = rng.integers(-3, 4, size=2).astype(np.float32)
        ids, dists = quadratic_knn(data, q, 15)
        res = exact_knn(ds, q, 15)
        assert res.ids.tolist() == ids
        np.testing.assert_allclose(res.distances, dists, rtol=1e-12)


def test_recall_cases():
    truth = [1, 2, 3, 4]
    assert recall([4, 3, 2, 1], truth, 4) == 1.0
    assert recall([5, 6, 7, 8], truth, 4) == 0.0
    assert recall([1, 2, 9, 8], truth, 4) == 0.5
    assert recall([1, 5], [1, 2, 3], 2) == 0.5


def test_mre_cases():
    assert mre([1.0, 2.0], [1.0, 2.0], 2) == 0.0
    assert mre([1.1, 2.2], [1.0, 2.0], 2) == pytest.approx(0.1)
    # zero true distance: rank dropped
    assert mre([0.0, 2.2], [0.0, 2.0], 2) == pytest.approx(0.1)
    assert mre([0.0, 0.0], [0.0, 0.0], 2) == 0.0
    assert mre([0.5, 0.0], [0.0, 0.0], 2) == math.inf
    with pytest.raises(ConfigurationError):
        mre([1.0], [1.0, 2.0], 2)


def test_mean_metrics(rng):
    ds = Dataset(rng.normal(size=(50, 4)))
    queries = rng.normal(size=(3, 4))
    gt = ground_truth(ds, queries, 10)
    exact = [exact_knn(ds, q, 5) for q in queries]
    assert mean_metrics(exact, gt, 5) == (1.0, 0.0)
    off = [QueryResult(r.ids[::-1].copy(), r.distances * 1.5) for r in exact]
    rec, err = mean_metrics(off, gt, 5)
    assert rec == 1.0 and err > 0
    with pytest.raises(ConfigurationError):
        mean_metrics(exact, gt, 11)


def test_truth_files_round_trip(tmp_path, rng):
    ds = Dataset(rng.normal(size=(40, 3)))
    queries = rng.normal(size=(4, 3)).astype(np.float32)
    gt = ground_truth(ds, queries, 6)
    gt.save(tmp_path / "gt")
    back = GroundTruth.load(tmp_path / "gt.ivecs")
    np.testing.assert_array_equal(back.ids, gt.ids)
    np.testing.assert_allclose(back.distances, gt.distances, rtol=1e-6)
    assert back.with_exact_distances(ds, queries) == gt


def test_cached_ground_truth(tmp_path, rng):
    ds = Dataset(rng.normal(size=(40, 3)))
    queries = rng.normal(size=(4, 3)).astype(np.float32)
    first = cached_ground_truth(ds, queries, 5, tmp_path)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert len(files) == 2
    second = cached_ground_truth(ds, queries, 5, tmp_path)
    np.testing.assert_array_equal(first.ids, second.ids)
    assert sorted(p.name for p in tmp_path.iterdir()) == files


def test_log_spaced_ranks():
    r = log_spaced_ranks(10_000, 50)
    assert r[0] == 1 and r[-1] == 10_000
    assert np.all(np.diff(r) > 0)


def test_profile_flat_at_alpha_one(rng):
    ds = Dataset(rng.normal(size=(100, 8)))
    prof = score_rank_profile(ds, sample_subspaces(8, 4), rng.normal(size=(3, 8)), 1.0)
    assert np.all(prof.mean_scores == 4)


def test_profile_decreases_on_clusters():
    data = gaussian_clusters(2000, 16, clusters=8, seed=4)
    ds = Dataset(data)
    queries = data[:10] + 0.01
    prof = score_rank_profile(ds, sample_subspaces(16, 4), queries, 0.1)
    assert prof.at_ranks([1])[0] > prof.at_ranks([1000])[0]
    assert prof.spearman() < -0.5
