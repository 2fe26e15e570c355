"""Problem generation, wall-clock measurement, CSV emission and speedups."""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DeviceLimits, EvaluationBatch, GroundSet, Precision, build_ground_set
from .errors import (
    BudgetExceedsGroundSetError,
    IncomparableRecordsError,
    OutOfMemoryError,
)
from .evaluate import Evaluator, evaluate_batch
from .objective import SQUARED_EUCLIDEAN

CSV_FIELDS = (
    "vary",
    "n",
    "l",
    "k",
    "d",
    "precision",
    "backend",
    "workers",
    "seed",
    "repetitions",
    "runtime_seconds",
)

# Desk-scale fixed point for a single-host sweep; the larger preset is for
# machines with more memory bandwidth and cores.
DESK_DEFAULTS = {"n": 20000, "l": 500, "k": 10, "d": 100}
LARGE_DEFAULTS = {"n": 50000, "l": 5000, "k": 10, "d": 100}


@dataclass(frozen=True)
class BenchRecord:
    """One timed configuration. Data generation is never part of the time."""

    vary: str
    n: int
    l: int
    k: int
    d: int
    precision: str
    backend: str
    workers: int
    seed: int
    repetitions: int
    runtime_seconds: float

    @property
    def failed(self) -> bool:
        return not self.runtime_seconds == self.runtime_seconds  # NaN

    def shape_key(self):
        return (self.n, self.l, self.k, self.d, self.seed)


def generate_problem(
    n: int,
    l: int,
    k: int,
    d: int,
    seed: int,
    precision: Precision = Precision.binary32,
):
    """Seeded random problem: uniform [0, 1) ground data, evaluation sets
    sampled without replacement from the ground vectors."""
    if min(n, l, k, d) < 1:
        raise ValueError("n, l, k and d must all be >= 1")
    if k > n:
        raise BudgetExceedsGroundSetError(f"k={k} exceeds n={n}")
    rng = np.random.default_rng(seed)
    if precision is Precision.binary64:
        values = rng.random((n, d), dtype=np.float64)
    else:
        values = rng.random((n, d), dtype=np.float32)
    if precision is Precision.binary16:
        # Keep the half-rounded values strictly below 1.
        values = np.minimum(
            values.astype(np.float16), np.float16(np.nextafter(np.float16(1), np.float16(0)))
        )
    ground = build_ground_set(values, aux="zero", precision=precision)
    sets = [ground.matrix[np.sort(rng.choice(n, size=k, replace=False))] for _ in range(l)]
    batch = EvaluationBatch.from_sets(sets)
    return ground, batch


def _time_once(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def run_benchmark(
    vary: str,
    values: Sequence[int],
    fixed: Optional[dict] = None,
    backends: Sequence[str] = ("reference",),
    precisions: Sequence[Precision] = (Precision.binary32,),
    repetitions: int = 5,
    seed: int = 0,
    workers: int = 1,
    limits: Optional[DeviceLimits] = None,
) -> list:
    """Time every (value, backend, precision) combination.

    The problem for each value/precision pair is generated once, outside
    the timed region. The median wall-clock time over ``repetitions`` runs
    is recorded. An out-of-memory failure during evaluation becomes a
    record with a NaN runtime instead of aborting the sweep.
    """
    if vary not in ("n", "l", "k"):
        raise ValueError("vary must be one of 'n', 'l', 'k'")
    if not values:
        raise ValueError("values must be non-empty")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    shape = dict(DESK_DEFAULTS)
    shape.update(fixed or {})
    if limits is None:
        limits = DeviceLimits()

    records = []
    for value in values:
        cfg = dict(shape)
        cfg[vary] = int(value)
        for precision in precisions:
            ground, batch = generate_problem(
                cfg["n"], cfg["l"], cfg["k"], cfg["d"], seed, precision
            )
            for backend in backends:
                if backend == "noop":
                    run = lambda: np.zeros(batch.l)
                else:
                    evaluator = Evaluator(
                        backend=backend, limits=limits, worker_count=workers
                    )
                    run = lambda: evaluate_batch(
                        evaluator, ground, batch, SQUARED_EUCLIDEAN
                    )
                try:
                    times = [_time_once(run) for _ in range(repetitions)]
                    runtime = statistics.median(times)
                except OutOfMemoryError:
                    runtime = float("nan")
                records.append(
                    BenchRecord(
                        vary=vary,
                        n=cfg["n"],
                        l=cfg["l"],
                        k=cfg["k"],
                        d=cfg["d"],
                        precision=precision.value,
                        backend=backend,
                        workers=workers,
                        seed=seed,
                        repetitions=repetitions,
                        runtime_seconds=runtime,
                    )
                )
    return records


def compute_speedup(baseline: BenchRecord, candidate: BenchRecord) -> float:
    """Ratio of baseline runtime to candidate runtime for one problem."""
    if baseline.shape_key() != candidate.shape_key():
        raise IncomparableRecordsError(
            f"records describe different problems: {baseline.shape_key()} "
            f"vs {candidate.shape_key()}"
        )
    return baseline.runtime_seconds / candidate.runtime_seconds


def write_csv(records: Sequence[BenchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for rec in records:
            row = asdict(rec)
            row["runtime_seconds"] = repr(rec.runtime_seconds)
            writer.writerow(row)


def read_csv(path) -> list:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                BenchRecord(
                    vary=row["vary"],
                    n=int(row["n"]),
                    l=int(row["l"]),
                    k=int(row["k"]),
                    d=int(row["d"]),
                    precision=row["precision"],
                    backend=row["backend"],
                    workers=int(row["workers"]),
                    seed=int(row["seed"]),
                    repetitions=int(row["repetitions"]),
                    runtime_seconds=float(row["runtime_seconds"]),
                )
            )
    return records


def linear_fit_r2(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Coefficient of determination of a least-squares line through (xs, ys)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0
    return 1.0 - ss_res / ss_tot
