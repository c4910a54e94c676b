"""``suco`` command line: build, query, groundtruth, bench, traversal, scscore, sclinear.

Exit codes: 0 success, 2 configuration, 3 file format / corrupt index,
4 index/dataset/query incompatibility, 1 anything else (including a
traversal mismatch found by ``bench --compare-traversal``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import datasets
from .bench import sweep, timed_queries, traversal_benchmark
from .core import Dataset
from .errors import FormatError, IncompatibilityError, SucoError
from .eval import (
    GroundTruth,
    ground_truth,
    log_spaced_ranks,
    mean_metrics,
    score_rank_profile,
    truth_paths,
)
from .index import build_index, load_index, save_index
from .io import hold_out_queries, load_dataset, load_queries, write_vecs
from .query import ENGINES, knn_query
from .sc_linear import CollisionParams, sc_linear_query
from .subspace import MODES, sample_subspaces

log = logging.getLogger("suco")
RESULTS_SCHEMA = "suco.results/1"


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _load_inputs(args) -> tuple[Dataset, np.ndarray]:
    dataset = load_dataset(args.dataset)
    queries = load_queries(args.queries, dataset.d)
    return dataset, queries


def _load_truth(path, dataset, queries) -> GroundTruth:
    gt = GroundTruth.load(path)
    if len(gt) != len(queries):
        raise IncompatibilityError(f"{path}: {len(gt)} truth rows for {len(queries)} queries")
    return gt.with_exact_distances(dataset, queries)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _results_json(results, extra: dict) -> dict:
    return {
        "schema": RESULTS_SCHEMA,
        **extra,
        "results": [{"ids": r.ids.tolist(), "distances": r.distances.tolist()} for r in results],
    }


def cmd_build(args) -> int:
    dataset = load_dataset(args.dataset)
    t0 = time.perf_counter()
    index = build_index(dataset, args.subspaces, args.khalf, args.iters, args.seed,
                        args.mode, args.threads)
    elapsed = time.perf_counter() - t0
    save_index(index, args.out)
    _emit({
        "index": str(args.out), "n": index.n, "d": index.d,
        "num_subspaces": index.num_subspaces, "k_half": index.k_half,
        "iters": index.iters, "seed": index.seed, "mode": index.layout.mode,
        "build_seconds": elapsed, "index_bytes": os.path.getsize(args.out),
        "dataset_hash": dataset.digest()[:16],
    })
    return 0


def cmd_query(args) -> int:
    index = load_index(args.index)
    dataset, queries = _load_inputs(args)
    index.check_compatible(dataset)
    params = CollisionParams(args.alpha, args.beta, args.k).validate(dataset.n)
    results, lat, wall = timed_queries(
        lambda q: knn_query(index, dataset, q, params, args.traversal, args.engine),
        queries, args.threads)
    summary = {"alpha": args.alpha, "beta": args.beta, "k": args.k,
               "traversal": args.traversal, "num_queries": len(queries),
               "mean_latency_ms": lat * 1e3, "qps": len(queries) / wall if wall else 0.0}
    if args.truth:
        summary["recall"], summary["mre"] = mean_metrics(
            results, _load_truth(args.truth, dataset, queries), args.k)
    if args.out:
        Path(args.out).write_text(json.dumps(_results_json(results, summary)) + "\n")
    _emit(summary)
    return 0


def cmd_groundtruth(args) -> int:
    dataset, queries = _load_inputs(args)
    gt = ground_truth(dataset, queries, args.k)
    ids_path, dist_path = gt.save(args.out)
    _emit({"ids": str(ids_path), "distances": str(dist_path), "k": gt.k,
           "num_queries": len(gt), "dataset_hash": dataset.digest()[:16]})
    return 0


def cmd_bench(args) -> int:
    dataset, queries = _load_inputs(args)
    k_truth = max(args.k, 100)
    if args.truth and truth_paths(args.truth)[0].exists():
        truth = _load_truth(args.truth, dataset, queries)
    else:
        log.info("computing ground truth for %d queries", len(queries))
        truth = ground_truth(dataset, queries, k_truth)
    index = load_index(args.index) if args.index else None
    report = sweep(
        dataset, queries, truth, _floats(args.alphas), _floats(args.betas), args.k,
        index=index, num_subspaces=args.subspaces, k_half=args.khalf, iters=args.iters,
        seed=args.seed, mode=args.mode, compare_traversal=args.compare_traversal,
        engine=args.engine, threads=args.threads, name=Path(args.dataset).name,
    )
    if args.csv:
        report.to_csv(args.csv)
    print(report.to_json(args.json))
    if args.compare_traversal and not all(r.traversal_match for r in report.rows):
        log.error("dynamic_activation and multi_sequence returned different results")
        return 1
    return 0


def cmd_traversal(args) -> int:
    out = traversal_benchmark(args.khalf, args.alpha, args.n, args.instances,
                              args.engine, args.seed)
    _emit(out)
    return 0 if out["sequences_match"] else 1


def cmd_scscore(args) -> int:
    dataset, queries = _load_inputs(args)
    layout = sample_subspaces(dataset.d, args.subspaces, args.mode, args.seed, min_dims=1)
    profile = score_rank_profile(dataset, layout, queries, args.alpha)
    ranks = log_spaced_ranks(dataset.n, args.points)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "mean_sc_score"])
        for r, v in zip(ranks.tolist(), profile.at_ranks(ranks).tolist()):
            w.writerow([r, f"{v:.6f}"])
    _emit({"csv": str(args.out), "num_queries": len(queries),
           "num_subspaces": args.subspaces, "alpha": args.alpha,
           "score_at_rank_1": float(profile.mean_scores[0]),
           "score_at_rank_n": float(profile.mean_scores[-1]),
           "spearman": profile.spearman()})
    return 0


def cmd_sclinear(args) -> int:
    dataset, queries = _load_inputs(args)
    layout = sample_subspaces(dataset.d, args.subspaces, args.mode, args.seed, min_dims=1)
    params = CollisionParams(args.alpha, args.beta, args.k).validate(dataset.n)
    results, lat, wall = timed_queries(
        lambda q: sc_linear_query(dataset, layout, q, params), queries, args.threads)
    summary = {"alpha": args.alpha, "beta": args.beta, "k": args.k,
               "num_subspaces": args.subspaces, "num_queries": len(queries),
               "mean_latency_ms": lat * 1e3, "qps": len(queries) / wall if wall else 0.0}
    truth = _load_truth(args.truth, dataset, queries) if args.truth else None
    if truth is not None:
        summary["recall"], summary["mre"] = mean_metrics(results, truth, args.k)
    if args.index:
        index = load_index(args.index)
        index.check_compatible(dataset)
        suco_res, suco_lat, _ = timed_queries(
            lambda q: knn_query(index, dataset, q, params), queries, args.threads)
        summary["suco_mean_latency_ms"] = suco_lat * 1e3
        summary["speedup"] = lat / suco_lat if suco_lat else None
        if truth is not None:
            summary["suco_recall"], summary["suco_mre"] = mean_metrics(suco_res, truth, args.k)
    if args.out:
        Path(args.out).write_text(json.dumps(_results_json(results, summary)) + "\n")
    _emit(summary)
    return 0


def cmd_holdout(args) -> int:
    dataset = load_dataset(args.dataset)
    split = hold_out_queries(dataset, args.count, args.seed)
    write_vecs(args.out_base, "f32", split.base.data)
    write_vecs(args.out_queries, "f32", split.queries)
    _emit({"base": str(args.out_base), "queries": str(args.out_queries),
           "n": split.base.n, "num_queries": len(split.queries),
           "query_ids": split.query_ids.tolist()})
    return 0


def cmd_synth(args) -> int:
    gen = {
        "sift": lambda: datasets.sift_like(args.n, args.d, seed=args.seed),
        "clusters": lambda: datasets.gaussian_clusters(args.n, args.d, args.clusters, seed=args.seed),
        "uniform": lambda: datasets.uniform(args.n, args.d, args.seed),
    }[args.kind]
    write_vecs(args.out, "f32", gen())
    _emit({"out": str(args.out), "kind": args.kind, "n": args.n, "d": args.d})
    return 0


def _common_index_flags(p) -> None:
    p.add_argument("--subspaces", type=int, default=8, help="number of subspaces N_s")
    p.add_argument("--khalf", type=int, default=50, help="k-means clusters per half (K = khalf^2)")
    p.add_argument("--iters", type=int, default=10, help="Lloyd iterations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=MODES, default="contiguous")


def _query_flags(p, beta: float = 0.005) -> None:
    p.add_argument("--alpha", type=float, default=0.05, help="collision ratio")
    p.add_argument("--beta", type=float, default=beta, help="re-rank ratio")
    p.add_argument("--k", type=int, default=50)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="suco", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    threads = dict(type=int, default=os.cpu_count() or 1, help="worker threads")

    p = sub.add_parser("build", help="build an index from a vecs dataset")
    p.add_argument("dataset")
    p.add_argument("out")
    _common_index_flags(p)
    p.add_argument("--threads", **threads)
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("query", help="answer k-ANN queries with a built index")
    p.add_argument("index")
    p.add_argument("dataset")
    p.add_argument("queries")
    _query_flags(p)
    p.add_argument("--truth", help="ground-truth prefix (.ivecs/.fvecs) for recall and MRE")
    p.add_argument("--out", help="write per-query results as JSON")
    p.add_argument("--traversal", choices=("dynamic_activation", "multi_sequence"),
                   default="dynamic_activation")
    p.add_argument("--engine", choices=ENGINES, default="auto")
    p.add_argument("--threads", **threads)
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("groundtruth", help="exact k-NN for a query set")
    p.add_argument("dataset")
    p.add_argument("queries")
    p.add_argument("out", help="output prefix; writes <out>.ivecs and <out>.fvecs")
    p.add_argument("--k", type=int, default=100)
    p.set_defaults(fn=cmd_groundtruth)

    p = sub.add_parser("bench", help="sweep alpha/beta and report quality and speed")
    p.add_argument("dataset")
    p.add_argument("queries")
    p.add_argument("--truth", help="ground-truth prefix; computed when absent")
    p.add_argument("--index", help="reuse a saved index instead of building one")
    _common_index_flags(p)
    p.add_argument("--alphas", default="0.05")
    p.add_argument("--betas", default="0.005")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--compare-traversal", action="store_true")
    p.add_argument("--engine", choices=ENGINES, default="auto")
    p.add_argument("--threads", **threads)
    p.add_argument("--csv")
    p.add_argument("--json")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("traversal", help="time Dynamic Activation against Multi-sequence")
    p.add_argument("--khalf", type=int, default=1024)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--engine", choices=ENGINES, default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_traversal)

    p = sub.add_parser("scscore", help="mean SC-score per nearest-neighbor rank (CSV)")
    p.add_argument("dataset")
    p.add_argument("queries")
    p.add_argument("out")
    p.add_argument("--subspaces", type=int, default=8)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--mode", choices=MODES, default="contiguous")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=200, help="log-spaced ranks to emit")
    p.set_defaults(fn=cmd_scscore)

    p = sub.add_parser("sclinear", help="index-free subspace collision search")
    p.add_argument("dataset")
    p.add_argument("queries")
    p.add_argument("--subspaces", type=int, default=8)
    p.add_argument("--mode", choices=MODES, default="contiguous")
    p.add_argument("--seed", type=int, default=0)
    _query_flags(p)
    p.add_argument("--truth")
    p.add_argument("--index", help="also time the indexed search and report the speedup")
    p.add_argument("--out")
    p.add_argument("--threads", **threads)
    p.set_defaults(fn=cmd_sclinear)

    p = sub.add_parser("holdout", help="split random points off a dataset as queries")
    p.add_argument("dataset")
    p.add_argument("out_base")
    p.add_argument("out_queries")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_holdout)

    p = sub.add_parser("synth", help="write a seeded synthetic dataset as fvecs")
    p.add_argument("out")
    p.add_argument("--kind", choices=("sift", "clusters", "uniform"), default="sift")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--d", type=int, default=128)
    p.add_argument("--clusters", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except SucoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FormatError.exit_code


if __name__ == "__main__":
    sys.exit(main())
