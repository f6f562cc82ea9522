"""Command-line front end: build-anchors, score, evaluate, sweep, convert.

Every command is deterministic given its flags; randomness only enters
through explicit --seed values. Errors are emitted as one JSON object per
line on stderr and produce a nonzero exit code.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

from .aggregation import (
    AggregationSpec,
    build_centroid_pair,
    load_centroids,
    save_centroids,
)
from .errors import AnchorScoreError
from .evaluation import (
    ALL_MEASURES,
    evaluate,
    report_to_json_dict,
    write_report_csv,
)
from .harness import (
    emit_results,
    has_error_rows,
    load_sweep_config,
    run_sweep,
)
from .scoring import score_batch
from .store import (
    load_dataset,
    save_dataset,
    split_by_median,
    split_by_reference_flag,
)


def _fail(message: str) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return 1


def _bool_flag(value: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise argparse.ArgumentTypeError(f"expected 'true' or 'false', got {value!r}")


def _dataset_format(value: str | None) -> str | None:
    return None if value in (None, "auto") else value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anchorscore",
        description="Build anchor centroids from embedding pools, score "
        "embeddings against them, and evaluate agreement with opinion scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-anchors", help="split a pool and write a centroid file")
    p.add_argument("--anchors", required=True, help="embedding pool (qseb or csv)")
    p.add_argument("--format", choices=["auto", "qseb", "csv"], default="auto")
    p.add_argument("--split", choices=["median", "reference-flag"], required=True)
    p.add_argument("--method", choices=["mean", "offset", "kmeans"], required=True)
    p.add_argument("--offset", type=float, help="offset fraction in [0, 0.5)")
    p.add_argument("--clusters", type=int, help="number of kmeans clusters")
    p.add_argument("--seed", type=int, help="seed for kmeans (required for kmeans)")
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--normalize", type=_bool_flag, default=True)
    p.add_argument("--out", required=True, help="centroid JSON output path")

    p = sub.add_parser("score", help="score a dataset against a centroid file")
    p.add_argument("--centroids", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["auto", "qseb", "csv"], default="auto")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV output path")

    p = sub.add_parser("evaluate", help="correlate scores with MOS")
    p.add_argument("--centroids", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["auto", "qseb", "csv"], default="auto")
    p.add_argument("--measures", default="srcc", help="comma list of srcc,krcc,plcc")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="also write the report JSON here")
    p.add_argument("--per-image-csv", help="also write per-image (id,score,mos) CSV")

    p = sub.add_parser("sweep", help="run an ablation sweep from a config file")
    p.add_argument("--config", required=True, help="sweep config JSON")
    p.add_argument("--out", required=True, help="results output path")
    p.add_argument("--results-format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("convert", help="convert a dataset between formats")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--in-format", choices=["auto", "qseb", "csv"], default="auto")
    p.add_argument("--out", required=True)
    p.add_argument("--out-format", choices=["auto", "qseb", "csv"], default="auto")

    return parser


def _cmd_build_anchors(args) -> int:
    if args.method == "offset" and args.offset is None:
        return _fail("--offset is required for the offset method")
    if args.method == "kmeans":
        if args.clusters is None:
            return _fail("--clusters is required for the kmeans method")
        if args.seed is None:
            return _fail("--seed is required for the kmeans method (stochastic)")
    pool = load_dataset(args.anchors, _dataset_format(args.format))
    if args.split == "median":
        high, low = split_by_median(pool)
    else:
        high, low = split_by_reference_flag(pool)
    if args.method == "mean":
        spec = AggregationSpec.mean(args.normalize)
    elif args.method == "offset":
        spec = AggregationSpec.offset(args.offset, args.normalize)
    else:
        spec = AggregationSpec.kmeans(
            n_clusters=args.clusters,
            seed=args.seed,
            max_iter=args.max_iter,
            tol=args.tol,
            n_init=args.n_init,
            normalize_inputs=args.normalize,
        )
    pair = build_centroid_pair(spec, high, low, provenance=args.anchors)
    save_centroids(pair, args.out)
    print(f"high subset: {len(high)} records")
    print(f"low subset: {len(low)} records")
    print(f"spec: {pair.spec}")
    print(f"wrote {args.out}")
    return 0


def _cmd_score(args) -> int:
    pair = load_centroids(args.centroids)
    dataset = load_dataset(args.input, _dataset_format(args.format))
    results, failures = score_batch(dataset, pair, threads=args.threads)
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "s_high", "s_low", "score"])
        for rid, c in results:
            w.writerow([rid, repr(c.s_high), repr(c.s_low), repr(c.score)])
    for failure in failures:
        print(
            json.dumps(
                {"error": failure.message, "id": failure.id, "index": failure.index}
            ),
            file=sys.stderr,
        )
    print(f"scored {len(results)} records, {len(failures)} failures -> {args.out}")
    return 0 if not failures else 1


def _cmd_evaluate(args) -> int:
    measures = tuple(m.strip() for m in args.measures.split(",") if m.strip())
    for m in measures:
        if m not in ALL_MEASURES:
            return _fail(f"unknown measure {m!r}; expected subset of {ALL_MEASURES}")
    pair = load_centroids(args.centroids)
    dataset = load_dataset(args.input, _dataset_format(args.format))
    report = evaluate(dataset, pair, measures, threads=args.threads)
    payload = report_to_json_dict(report)
    print(json.dumps(payload, indent=2))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    if args.per_image_csv:
        write_report_csv(report, args.per_image_csv)
    return 0


def _cmd_sweep(args) -> int:
    config = load_sweep_config(args.config)
    results = run_sweep(config)
    emit_results(results, args.out, args.results_format)
    errors = has_error_rows(results)
    print(f"wrote {args.out} ({'with error rows' if errors else 'no error rows'})")
    if errors:
        for r in results:
            for o in r.per_eval_set:
                if o.error is not None:
                    print(
                        json.dumps(
                            {
                                "error": o.error,
                                "axis_value": r.axis_value,
                                "eval_set": o.name,
                            }
                        ),
                        file=sys.stderr,
                    )
        return 1
    return 0


def _cmd_convert(args) -> int:
    dataset = load_dataset(args.in_path, _dataset_format(args.in_format))
    save_dataset(dataset, args.out, _dataset_format(args.out_format))
    print(f"converted {len(dataset)} records -> {args.out}")
    return 0


_COMMANDS = {
    "build-anchors": _cmd_build_anchors,
    "score": _cmd_score,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "convert": _cmd_convert,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except AnchorScoreError as e:
        return _fail(str(e))
    except OSError as e:
        return _fail(f"i/o error: {e}")


if __name__ == "__main__":
    sys.exit(main())
