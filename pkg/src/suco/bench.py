"""Benchmark harness: parameter sweeps, traversal comparison, report files."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset, QueryResult
from .eval import GroundTruth, mean_metrics
from .index import Imi, SucoIndex, build_index, to_bytes
from .query import (
    TRAVERSALS,
    CentroidDistances,
    _kernel_ranks,
    _resolve_engine,
    batch_query,
    knn_query,
    traverse,
)
from .sc_linear import CollisionParams

SCHEMA = "suco.bench/1"


@dataclass
class BenchRow:
    dataset: str
    dataset_hash: str
    num_subspaces: int
    k_half: int
    iters: int
    seed: int
    alpha: float
    beta: float
    k: int
    traversal: str
    engine: str
    threads: int
    build_seconds: float
    index_bytes: int
    mean_latency_ms: float
    qps: float
    recall: float
    mre: float
    traversal_match: bool | None = None
    ms_latency_ratio: float | None = None  # multi_sequence / dynamic_activation


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    schema: str = SCHEMA

    def to_json(self, path=None) -> str:
        text = json.dumps({"schema": self.schema, "rows": [asdict(r) for r in self.rows]},
                          indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def to_csv(self, path) -> None:
        names = list(BenchRow.__dataclass_fields__)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["schema", *names])
            for r in self.rows:
                w.writerow([self.schema, *(getattr(r, n) for n in names)])


def timed_queries(fn, queries: np.ndarray, threads: int = 1,
                  warmup: bool = True) -> tuple[list[QueryResult], float, float]:
    """Run ``fn`` over all queries; returns (results, mean latency s, wall s).

    With ``warmup`` the first query runs once untimed so JIT compilation
    does not land in the measurement.
    """
    latencies = np.zeros(len(queries))
    if warmup and len(queries):
        fn(queries[0])

    def one(i):
        t0 = time.perf_counter()
        r = fn(queries[i])
        latencies[i] = time.perf_counter() - t0
        return r

    t0 = time.perf_counter()
    results = batch_query(one, np.arange(len(queries)), threads)
    wall = time.perf_counter() - t0
    return results, float(latencies.mean()) if len(queries) else 0.0, wall


def sweep(
    dataset: Dataset,
    queries: np.ndarray,
    truth: GroundTruth,
    alphas=(0.05,),
    betas=(0.005,),
    k: int = 50,
    index: SucoIndex | None = None,
    num_subspaces: int = 8,
    k_half: int = 50,
    iters: int = 10,
    seed: int = 0,
    mode: str = "contiguous",
    compare_traversal: bool = False,
    engine: str = "auto",
    threads: int = 1,
    name: str = "dataset",
) -> BenchReport:
    build_seconds = 0.0
    if index is None:
        t0 = time.perf_counter()
        index = build_index(dataset, num_subspaces, k_half, iters, seed, mode, threads)
        build_seconds = time.perf_counter() - t0
    index.check_compatible(dataset)
    index_bytes = len(to_bytes(index))
    digest = dataset.digest()[:16]
    report = BenchReport()
    for alpha in alphas:
        for beta in betas:
            params = CollisionParams(alpha, beta, k).validate(dataset.n)
            res, lat, wall = timed_queries(
                lambda q: knn_query(index, dataset, q, params, "dynamic_activation", engine),
                queries, threads)
            rec, err = mean_metrics(res, truth, k)
            row = BenchRow(
                dataset=name, dataset_hash=digest, num_subspaces=index.num_subspaces,
                k_half=index.k_half, iters=index.iters, seed=index.seed, alpha=alpha,
                beta=beta, k=k, traversal="dynamic_activation", engine=engine,
                threads=threads, build_seconds=build_seconds, index_bytes=index_bytes,
                mean_latency_ms=lat * 1e3, qps=len(queries) / wall if wall > 0 else 0.0,
                recall=rec, mre=err,
            )
            if compare_traversal:
                ms_res, ms_lat, _ = timed_queries(
                    lambda q: knn_query(index, dataset, q, params, "multi_sequence", engine),
                    queries, threads)
                row.traversal_match = all(a == b for a, b in zip(res, ms_res))
                row.ms_latency_ratio = ms_lat / lat if lat > 0 else None
            report.rows.append(row)
    return report


def random_imi(k_half: int, n: int, rng: np.random.Generator) -> Imi:
    """An IMI with ``n`` points scattered over cells with skewed occupancy."""
    weights = rng.pareto(1.5, size=k_half * k_half) + 1e-3
    cells = rng.choice(k_half * k_half, size=n, p=weights / weights.sum())
    return Imi.from_assignments(cells // k_half, cells % k_half, k_half)


def traversal_benchmark(k_half: int = 1024, alpha: float = 0.05, n: int = 1_000_000,
                        instances: int = 20, engine: str = "auto", seed: int = 0) -> dict:
    """Time both traversals on random IMI instances of the given shape.

    Every instance is also checked for identical retrieval sequences.
    """
    rng = np.random.default_rng(seed)
    imi = random_imi(k_half, n, rng)
    resolved = _resolve_engine(engine)

    def run(name, cd1, cd2):
        if resolved == "python":
            return TRAVERSALS[name](alpha, n, cd1, cd2, imi)
        return _kernel_ranks(name, alpha, n, cd1, cd2, imi)
    times = {"dynamic_activation": [], "multi_sequence": []}
    match = True
    cells = 0
    for it in range(instances):
        cd1 = CentroidDistances.from_values(rng.random(k_half))
        cd2 = CentroidDistances.from_values(rng.random(k_half))
        for name in times:
            if it == 0:
                run(name, cd1, cd2)  # jit warm-up
            t0 = time.perf_counter()
            run(name, cd1, cd2)
            times[name].append(time.perf_counter() - t0)
        da_seq = traverse(alpha, n, cd1, cd2, imi, "dynamic_activation", engine)
        match &= da_seq == traverse(alpha, n, cd1, cd2, imi, "multi_sequence", engine)
        cells += len(da_seq)
    da = float(np.mean(times["dynamic_activation"]))
    ms = float(np.mean(times["multi_sequence"]))
    return {
        "schema": "suco.traversal/1",
        "k_half": k_half, "alpha": alpha, "n": n, "instances": instances, "engine": resolved,
        "mean_cells": cells / instances,
        "dynamic_activation_ms": da * 1e3,
        "multi_sequence_ms": ms * 1e3,
        "speedup": ms / da if da > 0 else None,
        "sequences_match": bool(match),
    }
