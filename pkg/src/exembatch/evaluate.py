"""Batch-evaluation backends and chunking under a memory budget.

Three backends compute the same l function values:

* ``reference``: one set at a time, single-threaded (BLAS pinned to one
  thread), the ground truth for everything else.
* ``parallel``: the same per-cell arithmetic with the work matrix
  partitioned across host worker threads.
* ``tiled``: the device execution model. The batch is packed and padded, a
  kernel configuration is derived, ground vectors are staged tile by tile
  and every work-matrix cell is computed from the packed buffer before a
  row-wise reduction.

All per-point arithmetic sweeps the ground set in the same fixed-width
column blocks, so reference and parallel results are bit-identical and
chunking never changes an output bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .core import (
    DeviceLimits,
    EvaluationBatch,
    GroundSet,
    KernelConfig,
    PackedBatch,
    Precision,
    compute_kernel_config,
    pack_batch,
)
from .errors import DimensionMismatchError, OutOfMemoryError
from .objective import SQUARED_EUCLIDEAN, Dissimilarity, _as_elements, min_distances

BACKENDS = ("reference", "parallel", "tiled")

# Target number of ground rows handled per vectorized tile group in the
# tiled backend. Groups are whole multiples of b_x so the grouping is a
# pure speed knob: it never changes which values are computed.
_TILE_GROUP_ROWS = 4096


@dataclass(frozen=True)
class Evaluator:
    """Backend selection plus the execution-model inputs it needs."""

    backend: str = "reference"
    limits: DeviceLimits = field(default_factory=DeviceLimits)
    worker_count: int = 1
    precision: Optional[Precision] = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(
                f"unknown backend {self.backend!r}; expected one of {BACKENDS}"
            )
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")


@dataclass(frozen=True)
class ChunkPlan:
    """Partition of a batch into memory-budget-respecting groups of sets."""

    chunk_size: int
    chunk_count: int
    per_set_bytes: int
    free_bytes: int


def estimate_set_memory(n: int, k_max: int, d: int, precision: Precision) -> int:
    """Bytes needed to evaluate one set: its packed slice, its work-matrix
    row, and 16 bytes of metadata (cardinality entry plus result slot)."""
    if min(n, k_max, d) < 1:
        raise ValueError("n, k_max and d must all be >= 1")
    return (k_max * d + n) * precision.bytes_per_value + 16


def plan_chunks(free_bytes: int, per_set_bytes: int, l: int) -> ChunkPlan:
    """Determine how many evaluation sets fit into one chunk."""
    if per_set_bytes < 1 or l < 1:
        raise ValueError("per_set_bytes and l must be >= 1")
    chunk_size = free_bytes // per_set_bytes
    if chunk_size == 0:
        raise OutOfMemoryError(
            f"a single evaluation set needs {per_set_bytes} bytes but only "
            f"{free_bytes} are free; use a lower precision or a larger budget"
        )
    chunk_size = min(chunk_size, l)
    return ChunkPlan(
        chunk_size=chunk_size,
        chunk_count=math.ceil(l / chunk_size),
        per_set_bytes=per_set_bytes,
        free_bytes=free_bytes,
    )


def _set_value(
    ground: GroundSet, elems: np.ndarray, dissimilarity: Dissimilarity
):
    """f(S) for one set: per-point min sweep, ascending sum, baseline delta."""
    acc = ground.precision.accumulate_dtype
    t = min_distances(ground, elems, dissimilarity, include_aux=True)
    sigma = np.sum(t, dtype=acc)
    return acc.type(ground.aux_loss) - sigma / acc.type(ground.n)


def evaluate_single(
    ground: GroundSet, set_vectors, dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN
) -> float:
    """Evaluate one set with the sequential per-point min loop."""
    elems = _as_elements(ground, set_vectors)
    if elems.shape[0] == 0:
        return 0.0
    with threadpool_limits(limits=1):
        return float(_set_value(ground, elems, dissimilarity))


def _check_batch(ground: GroundSet, batch: EvaluationBatch):
    if batch.d != ground.d:
        raise DimensionMismatchError(
            f"batch is {batch.d}-dim but the ground set is {ground.d}-dim"
        )


def _effective_precision(evaluator: Evaluator, ground: GroundSet) -> Precision:
    if evaluator.precision is not None and evaluator.precision is not ground.precision:
        raise ValueError(
            "evaluator precision differs from the ground set precision; "
            "build the ground set at the desired precision"
        )
    return ground.precision


def _reference_eval(ground, batch, dissimilarity):
    acc = ground.precision.accumulate_dtype
    out = np.empty(batch.l, dtype=acc)
    elems_list = [a.astype(ground.precision.dtype, copy=False) for a in batch.sets]
    with threadpool_limits(limits=1):
        for j, elems in enumerate(elems_list):
            out[j] = _set_value(ground, elems, dissimilarity)
    return out


def _parallel_eval(ground, batch, dissimilarity, workers):
    from .core import COL_BLOCK

    acc = ground.precision.accumulate_dtype
    dtype = ground.precision.dtype
    l, n = batch.l, ground.n
    out = np.empty(l, dtype=acc)
    elems_list = [a.astype(dtype, copy=False) for a in batch.sets]

    with threadpool_limits(limits=1):
        if l >= workers:
            groups = np.array_split(np.arange(l), workers)

            def run_rows(rows):
                for j in rows:
                    out[j] = _set_value(ground, elems_list[j], dissimilarity)

            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run_rows, groups))
        else:
            # Few rows: split the ground sweep instead. Workers fill disjoint
            # column ranges of the per-point min matrix; rows are reduced
            # afterwards exactly like the reference backend reduces them.
            t_rows = np.empty((l, n), dtype=dtype)
            starts = list(range(0, n, COL_BLOCK))

            def run_cols(my_starts):
                for start in my_starts:
                    stop = min(start + COL_BLOCK, n)
                    block = ground.matrix[start:stop]
                    aux = ground.aux_distances[start:stop]
                    for j, elems in enumerate(elems_list):
                        dmat = dissimilarity.distances(block, elems)
                        tmin = dmat.min(axis=1).astype(dtype, copy=False)
                        t_rows[j, start:stop] = np.minimum(tmin, aux)

            assigned = [starts[w::workers] for w in range(workers)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run_cols, assigned))
            for j in range(l):
                sigma = np.sum(t_rows[j], dtype=acc)
                out[j] = acc.type(ground.aux_loss) - sigma / acc.type(n)
    return out


def tiled_evaluate(
    ground: GroundSet,
    packed: PackedBatch,
    dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN,
    limits: Optional[DeviceLimits] = None,
    worker_count: int = 1,
    instrument: bool = False,
):
    """Evaluate a packed batch under the device execution model.

    Derives the kernel configuration, computes every work-matrix cell from
    the packed buffer (element loops bounded by each set's cardinality, so
    padding is never read) and reduces rows in ascending column order.

    With ``instrument=True`` the grid is walked block by block exactly as
    the model prescribes, and the per-vector staging-load counts are
    returned alongside the results; this path is meant for small instances.
    """
    if limits is None:
        limits = DeviceLimits()
    n, l = ground.n, packed.l
    config = compute_kernel_config(n, l, ground.bytes_per_vector, limits)
    dtype = packed.precision.dtype
    acc = packed.precision.accumulate_dtype
    inv_scale = dtype.type(n)

    elems_list = [packed.set_elements(j) for j in range(l)]
    W = np.empty((l, n), dtype=dtype)
    b_x, b_y = config.block[0], config.block[1]
    g_x, g_y = config.grid[0], config.grid[1]

    if instrument:
        loads = np.zeros(n, dtype=np.int64)
        for by in range(g_y):
            row_stop = min((by + 1) * b_y, l)
            rows = range(by * b_y, row_stop)
            for bx in range(g_x):
                col_stop = min((bx + 1) * b_x, n)
                cols = slice(bx * b_x, col_stop)
                staged = ground.matrix[cols]  # shared-memory emulation
                loads[cols] += 1
                aux = ground.aux_distances[cols]
                for j in rows:
                    dmat = dissimilarity.distances(staged, elems_list[j])
                    tmin = np.minimum(dmat.min(axis=1).astype(dtype, copy=False), aux)
                    W[j, cols] = tmin / inv_scale
    else:
        group_width = b_x * max(1, math.ceil(_TILE_GROUP_ROWS / b_x))
        starts = list(range(0, n, group_width))

        def run_groups(my_starts):
            for start in my_starts:
                stop = min(start + group_width, n)
                staged = ground.matrix[start:stop]
                aux = ground.aux_distances[start:stop]
                for j, elems in enumerate(elems_list):
                    dmat = dissimilarity.distances(staged, elems)
                    tmin = np.minimum(dmat.min(axis=1).astype(dtype, copy=False), aux)
                    W[j, start:stop] = tmin / inv_scale

        if worker_count > 1 and len(starts) > 1:
            assigned = [starts[w::worker_count] for w in range(worker_count)]
            with ThreadPoolExecutor(max_workers=worker_count) as pool:
                list(pool.map(run_groups, assigned))
        else:
            run_groups(starts)

    aux_loss = acc.type(ground.aux_loss)
    out = np.empty(l, dtype=acc)
    for j in range(l):
        out[j] = aux_loss - np.sum(W[j], dtype=acc)
    if instrument:
        return out, loads
    return out


def evaluate_batch(
    evaluator: Evaluator,
    ground: GroundSet,
    batch: EvaluationBatch,
    dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN,
) -> np.ndarray:
    """Evaluate every set of the batch, returning one value per set."""
    _check_batch(ground, batch)
    precision = _effective_precision(evaluator, ground)
    if evaluator.backend == "reference":
        return _reference_eval(ground, batch, dissimilarity)
    if evaluator.backend == "parallel":
        return _parallel_eval(ground, batch, dissimilarity, evaluator.worker_count)
    packed = pack_batch(batch, precision)
    return tiled_evaluate(
        ground,
        packed,
        dissimilarity,
        limits=evaluator.limits,
        worker_count=evaluator.worker_count,
    )


def evaluate_chunked(
    evaluator: Evaluator,
    ground: GroundSet,
    batch: EvaluationBatch,
    dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN,
    budget: int = 0,
) -> np.ndarray:
    """Evaluate a batch in memory-budget-sized chunks and merge the results.

    Chunks are contiguous groups of sets; each chunk recomputes its own
    padding width. Output order matches the input order and is bit-identical
    to an unchunked evaluation with the same backend.
    """
    _check_batch(ground, batch)
    precision = _effective_precision(evaluator, ground)
    mu = estimate_set_memory(ground.n, batch.k_max, batch.d, precision)
    plan = plan_chunks(budget, mu, batch.l)
    pieces = []
    for c in range(plan.chunk_count):
        start = c * plan.chunk_size
        stop = min(start + plan.chunk_size, batch.l)
        sub = EvaluationBatch.from_sets(batch.sets[start:stop])
        pieces.append(evaluate_batch(evaluator, ground, sub, dissimilarity))
    return np.concatenate(pieces)
