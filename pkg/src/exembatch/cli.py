"""Command-line front end: benchmarks, clustering runs and set evaluation.

Exit codes: 0 on success, 1 on usage errors, 2 when the memory budget
cannot hold even a single evaluation set.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import __version__
from .bench import DESK_DEFAULTS, run_benchmark, write_csv
from .core import DeviceLimits, EvaluationBatch, Precision
from .errors import ExemError, OutOfMemoryError
from .evaluate import BACKENDS, Evaluator, evaluate_batch, evaluate_chunked
from .io import load_ground_set, read_csv_observations
from .optimize import assign_clusters, greedy_maximize

_PRECISION_CHOICES = ("fp16", "fp32", "fp64")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="exembatch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_bench = sub.add_parser("bench", help="time batch evaluation over a parameter sweep")
    p_bench.add_argument("--vary", choices=("n", "l", "k"), required=True)
    p_bench.add_argument(
        "--values", required=True, help="comma-separated values of the varied parameter"
    )
    p_bench.add_argument("--n", type=int, default=DESK_DEFAULTS["n"])
    p_bench.add_argument("--l", type=int, default=DESK_DEFAULTS["l"])
    p_bench.add_argument("--k", type=int, default=DESK_DEFAULTS["k"])
    p_bench.add_argument("--d", type=int, default=DESK_DEFAULTS["d"])
    p_bench.add_argument("--backend", choices=BACKENDS, default="reference")
    p_bench.add_argument("--precision", choices=_PRECISION_CHOICES, default="fp32")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--reps", type=int, default=5)
    p_bench.add_argument("--out", required=True, help="output CSV path")

    p_cluster = sub.add_parser("cluster", help="greedy exemplar selection on a dataset")
    p_cluster.add_argument("--input", required=True, help="data.csv or data.exem")
    p_cluster.add_argument("--k", type=int, required=True)
    p_cluster.add_argument("--backend", choices=BACKENDS, default="reference")
    p_cluster.add_argument("--precision", choices=_PRECISION_CHOICES, default="fp32")
    p_cluster.add_argument("--workers", type=int, default=1)
    p_cluster.add_argument(
        "--memory-budget", type=int, default=None, help="chunking budget in bytes"
    )
    p_cluster.add_argument("--out", required=True, help="exemplar CSV path")
    p_cluster.add_argument("--labels", default=None, help="per-observation label CSV path")

    p_eval = sub.add_parser("eval", help="evaluate explicit sets against a dataset")
    p_eval.add_argument("--input", required=True, help="data.csv or data.exem")
    p_eval.add_argument(
        "--sets",
        required=True,
        help="CSV with rows 'set_id,x0,x1,...'; rows sharing a set_id form one set",
    )
    p_eval.add_argument("--backend", choices=BACKENDS, default="reference")
    p_eval.add_argument("--precision", choices=_PRECISION_CHOICES, default="fp32")
    p_eval.add_argument("--workers", type=int, default=1)

    sub.add_parser("info", help="print device-model defaults and version")
    return parser


def _read_sets_csv(path):
    """Rows 'set_id,x0,x1,...' grouped by first appearance of each id."""
    order = []
    groups = {}
    with open(path, newline="") as fh:
        for idx, row in enumerate(csv.reader(fh)):
            fields = [f.strip() for f in row if f.strip() != ""]
            if not fields:
                continue
            try:
                vec = [float(f) for f in fields[1:]]
                key = fields[0]
                float(fields[0])  # numeric id check; header row fails here
            except ValueError:
                if idx == 0:
                    continue
                raise ExemError(f"{path}: malformed row {idx + 1}") from None
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(vec)
    if not order:
        raise ExemError(f"{path}: no sets found")
    return [np.asarray(groups[key], dtype=np.float64) for key in order]


def _cmd_bench(args) -> int:
    values = [int(v) for v in args.values.split(",") if v.strip()]
    records = run_benchmark(
        vary=args.vary,
        values=values,
        fixed={"n": args.n, "l": args.l, "k": args.k, "d": args.d},
        backends=(args.backend,),
        precisions=(Precision.from_name(args.precision),),
        repetitions=args.reps,
        seed=args.seed,
        workers=args.workers,
    )
    write_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_cluster(args) -> int:
    precision = Precision.from_name(args.precision)
    ground = load_ground_set(args.input, precision=precision)
    evaluator = Evaluator(backend=args.backend, worker_count=args.workers)
    result = greedy_maximize(
        ground, args.k, evaluator, memory_budget=args.memory_budget
    )
    exemplars = ground.matrix[list(result.exemplar_indices)]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        for idx, vec in zip(result.exemplar_indices, exemplars):
            writer.writerow([idx, *(repr(float(v)) for v in vec)])
    if args.labels:
        labels = assign_clusters(ground, exemplars)
        with open(args.labels, "w", newline="") as fh:
            for label in labels:
                fh.write(f"{int(label)}\n")
    final = result.values[-1] if result.values else 0.0
    print(
        f"selected {len(result.exemplar_indices)} exemplars "
        f"(value {final:.6g}, {result.evaluations} evaluations)"
    )
    return 0


def _cmd_eval(args) -> int:
    precision = Precision.from_name(args.precision)
    ground = load_ground_set(args.input, precision=precision)
    sets = _read_sets_csv(args.sets)
    batch = EvaluationBatch.from_sets(sets)
    evaluator = Evaluator(backend=args.backend, worker_count=args.workers)
    values = evaluate_batch(evaluator, ground, batch)
    for value in values:
        print(repr(float(value)))
    return 0


def _cmd_info(_args) -> int:
    limits = DeviceLimits()
    print(f"exembatch {__version__}")
    print(f"max_threads_per_block = {limits.max_threads_per_block}")
    print(f"shared_memory_bytes   = {limits.shared_memory_bytes}")
    print(f"segment_bytes         = {limits.segment_bytes}")
    print(f"warp_size             = {limits.warp_size}")
    print(f"global_memory_bytes   = {limits.global_memory_bytes}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "bench": _cmd_bench,
        "cluster": _cmd_cluster,
        "eval": _cmd_eval,
        "info": _cmd_info,
    }
    try:
        return handlers[args.command](args)
    except OutOfMemoryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
