"""Benchmark command line: taskgp-bench."""

from __future__ import annotations

import argparse
import sys

from .bench import ExperimentSpec, emit_csv, run_experiment, summarize
from .errors import TaskGPError
from .runtime import RuntimeConfig

_OP_FLAGS = {
    "optimize": "optimize",
    "predict": "predict",
    "predict-full-cov": "predict_full_cov",
    "predict-var": "predict_var",
}


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskgp-bench",
        description=(
            "Time GP operations across worker counts and tile configurations; "
            "writes CSV and optional figures."
        ),
    )
    parser.add_argument("--op", choices=sorted(_OP_FLAGS), default="predict")
    parser.add_argument("--n-train", type=int, default=256)
    parser.add_argument("--n-test", type=int, default=256)
    parser.add_argument("--regressors", type=int, default=8)
    parser.add_argument(
        "--tiles", type=_int_list, default=(1,), help="comma list, e.g. 1,4,8"
    )
    parser.add_argument(
        "--workers",
        type=_int_list,
        default=None,
        help="comma list; defaults to TASKGP_WORKERS or the core count",
    )
    parser.add_argument("--reps", type=int, default=5)
    parser.add_argument("--warmup", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="CSV output path")
    parser.add_argument(
        "--summary", action="store_true", help="print speedup tables"
    )
    parser.add_argument(
        "--figures",
        action="store_true",
        help="render PNG figures alongside the CSV (requires --out)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    workers = args.workers
    if workers is None:
        workers = (RuntimeConfig().resolved_worker_count(),)
    try:
        spec = ExperimentSpec(
            operation=_OP_FLAGS[args.op],
            n_train=args.n_train,
            n_test=args.n_test,
            regressors=args.regressors,
            tiles_per_dim=args.tiles,
            worker_count=workers,
            repetitions=args.reps,
            warmup=args.warmup,
            output_path=args.out,
            seed=args.seed,
        )
    except TaskGPError as exc:
        print(f"invalid experiment: {exc}", file=sys.stderr)
        return 2
    records = run_experiment(spec)
    for rec in records:
        if rec.error is None:
            print(
                f"workers={rec.worker_count} tiles={rec.tiles_per_dim} "
                f"mean={rec.mean_s:.4f}s +-{rec.ci_half_width_s:.4f}s"
            )
        else:
            print(
                f"workers={rec.worker_count} tiles={rec.tiles_per_dim} "
                f"FAILED: {rec.error}",
                file=sys.stderr,
            )
    if args.out:
        emit_csv(records, args.out)
        print(f"wrote {args.out}")
        if args.figures:
            from .report import render_figures

            for path in render_figures(records, args.out):
                print(f"wrote {path}")
    if args.summary:
        print(summarize(records))
    return 2 if any(rec.error is not None for rec in records) else 0


if __name__ == "__main__":
    sys.exit(main())
