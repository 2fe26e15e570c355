"""Domain types, storage layouts, packing and the memory-transaction model.

The ground data lives in a column-major buffer (all values of dimension 0,
then all values of dimension 1, ...) so that lanes working on consecutive
observations read consecutive memory. Evaluation sets are interleaved
round-robin and padded to the longest set before vectorization, which keeps
same-position elements of different sets adjacent in memory.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyEvaluationSetError,
    EmptyGroundSetError,
    InvalidDataError,
    SharedMemoryOverflowError,
)

# Fixed column-block width used by every host backend when sweeping the
# ground set. A fixed width makes per-point results independent of worker
# count and of chunking, which is what makes those paths bit-identical.
COL_BLOCK = 8192


class Precision(enum.Enum):
    """Floating-point width used for stored values and distance arithmetic.

    binary16 is emulated in software: values are held in numpy float16
    buffers and every arithmetic step inside distance evaluation rounds to
    binary16 (round-to-nearest-even), since host CPUs have no native half
    support. Reductions over many half values accumulate at binary32 to
    avoid overflowing the half range.
    """

    binary16 = "binary16"
    binary32 = "binary32"
    binary64 = "binary64"

    @property
    def bytes_per_value(self) -> int:
        return _BYTES[self]

    @property
    def dtype(self) -> np.dtype:
        return _DTYPES[self]

    @property
    def accumulate_dtype(self) -> np.dtype:
        """Dtype used for sum reductions (binary16 accumulates at binary32)."""
        if self is Precision.binary16:
            return np.dtype(np.float32)
        return self.dtype

    @property
    def max_finite(self) -> float:
        return float(np.finfo(self.dtype).max)

    @classmethod
    def from_name(cls, name: str) -> "Precision":
        key = name.strip().lower()
        try:
            return _ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown precision {name!r}") from None


_BYTES = {Precision.binary16: 2, Precision.binary32: 4, Precision.binary64: 8}
_DTYPES = {
    Precision.binary16: np.dtype("<f2"),
    Precision.binary32: np.dtype("<f4"),
    Precision.binary64: np.dtype("<f8"),
}
_ALIASES = {
    "binary16": Precision.binary16,
    "fp16": Precision.binary16,
    "half": Precision.binary16,
    "float16": Precision.binary16,
    "binary32": Precision.binary32,
    "fp32": Precision.binary32,
    "single": Precision.binary32,
    "float32": Precision.binary32,
    "binary64": Precision.binary64,
    "fp64": Precision.binary64,
    "double": Precision.binary64,
    "float64": Precision.binary64,
}


@dataclass(frozen=True)
class DeviceLimits:
    """Execution-model constants of the emulated device.

    Defaults mirror common CUDA limits (1024 threads per block, 48 KiB of
    shared memory, 32-byte global-memory segments, warps of 32 lanes). They
    are explicit inputs because the tiled backend is a model of a device,
    not a probe of one.
    """

    max_threads_per_block: int = 1024
    shared_memory_bytes: int = 49152
    segment_bytes: int = 32
    warp_size: int = 32
    global_memory_bytes: int = 4 * 2**30

    def __post_init__(self):
        for name in (
            "max_threads_per_block",
            "shared_memory_bytes",
            "segment_bytes",
            "warp_size",
            "global_memory_bytes",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_threads_per_block % self.warp_size != 0:
            raise ValueError("warp_size must divide max_threads_per_block")


@dataclass(frozen=True)
class GroundSet:
    """The immutable dataset over which evaluation sets are scored.

    ``matrix`` has shape (n, d) and is stored in Fortran (column-major)
    order, so ``matrix.ravel(order="F")`` is the flat storage buffer.
    ``aux_distances[i]`` holds the precomputed dissimilarity between
    observation i and the auxiliary reference vector, and ``aux_loss`` is
    their mean: the loss of the reference set alone, computed once.
    """

    matrix: np.ndarray
    precision: Precision
    aux: np.ndarray
    aux_distances: np.ndarray
    aux_loss: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    @property
    def data(self) -> np.ndarray:
        """Flat column-major value buffer of length n*d."""
        return self.matrix.ravel(order="F")

    @property
    def bytes_per_vector(self) -> int:
        """Bytes one observation occupies at the stored precision."""
        return self.d * self.precision.bytes_per_value

    def vector(self, i: int) -> np.ndarray:
        return self.matrix[i]


@dataclass(frozen=True)
class EvaluationBatch:
    """A batch of evaluation sets, each carrying its own vectors."""

    sets: tuple
    d: int
    cardinalities: tuple
    k_max: int

    @property
    def l(self) -> int:
        return len(self.sets)

    @classmethod
    def from_sets(cls, sets: Sequence) -> "EvaluationBatch":
        if len(sets) == 0:
            raise EmptyEvaluationSetError("a batch needs at least one evaluation set")
        arrays = []
        for s in sets:
            try:
                arr = np.atleast_2d(np.asarray(s))
            except ValueError:
                raise DimensionMismatchError(
                    "evaluation set elements have inconsistent dimensionality"
                ) from None
            if arr.shape[0] == 0:
                raise EmptyEvaluationSetError("evaluation sets must be non-empty")
            arrays.append(arr)
        d = arrays[0].shape[1]
        for arr in arrays:
            if arr.shape[1] != d:
                raise DimensionMismatchError(
                    f"evaluation sets mix dimensionalities {d} and {arr.shape[1]}"
                )
        cards = tuple(a.shape[0] for a in arrays)
        return cls(
            sets=tuple(arrays), d=d, cardinalities=cards, k_max=max(cards)
        )


@dataclass(frozen=True)
class PackedBatch:
    """Round-robin interleaved, padded, vectorized form of a batch.

    The value for (set j, element e, dimension dim) lives at linear offset
    ``dim * (k_max * l) + e * l + j``. Slots past a set's cardinality are
    zero-filled padding and are never read.
    """

    values: np.ndarray
    l: int
    k_max: int
    d: int
    cardinalities: tuple
    precision: Precision

    @property
    def matrix(self) -> np.ndarray:
        """View of shape (d, k_max, l) over the flat buffer."""
        return self.values.reshape(self.d, self.k_max, self.l)

    def set_elements(self, j: int) -> np.ndarray:
        """The (|S_j|, d) element matrix of set j, read from the buffer."""
        m = self.cardinalities[j]
        return np.ascontiguousarray(self.matrix[:, :m, j].T)

    @property
    def blank_slots(self) -> int:
        return self.d * sum(self.k_max - c for c in self.cardinalities)


@dataclass(frozen=True)
class KernelConfig:
    """Block and grid dimensioning covering every work-matrix cell."""

    block: tuple
    grid: tuple
    shared_bytes_per_block: int


def build_ground_set(
    observations,
    aux="zero",
    precision: Precision = Precision.binary32,
    dissimilarity=None,
) -> GroundSet:
    """Build an immutable ground set with precomputed reference distances.

    Parameters
    ----------
    observations : sequence of d-dim vectors or (n, d) array
    aux : d-dim vector or "zero"
        Reference vector for the representativity baseline.
    precision : Precision
        Storage and arithmetic precision.
    dissimilarity : Dissimilarity, optional
        Defaults to squared Euclidean distance.
    """
    if dissimilarity is None:
        from .objective import SQUARED_EUCLIDEAN

        dissimilarity = SQUARED_EUCLIDEAN

    try:
        arr = np.asarray(observations, dtype=np.float64)
    except ValueError:
        # Ragged python input cannot form a rectangular array.
        raise DimensionMismatchError(
            "observations have inconsistent dimensionality"
        ) from None
    if arr.size == 0:
        raise EmptyGroundSetError("the ground set must contain at least one observation")
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionMismatchError("observations must form an (n, d) matrix")
    if not np.all(np.isfinite(arr)):
        raise InvalidDataError("observations contain non-finite values")

    n, d = arr.shape
    matrix = np.asfortranarray(arr.astype(precision.dtype))
    matrix.flags.writeable = False

    if isinstance(aux, str):
        if aux != "zero":
            raise ValueError(f"unknown auxiliary vector spec {aux!r}")
        aux_vec = np.zeros(d, dtype=precision.dtype)
    else:
        aux_vec = np.asarray(aux, dtype=precision.dtype)
        if aux_vec.shape != (d,):
            raise DimensionMismatchError(
                f"auxiliary vector has shape {aux_vec.shape}, expected ({d},)"
            )
        if not np.all(np.isfinite(aux_vec.astype(np.float64))):
            raise InvalidDataError("auxiliary vector contains non-finite values")
    aux_vec.flags.writeable = False

    aux_distances = dissimilarity.distances(matrix, aux_vec.reshape(1, d))[:, 0]
    aux_distances = np.ascontiguousarray(aux_distances, dtype=precision.dtype)
    aux_distances.flags.writeable = False

    acc = precision.accumulate_dtype
    mean = np.sum(aux_distances, dtype=acc) / acc.type(n)
    aux_loss = precision.dtype.type(mean)

    return GroundSet(
        matrix=matrix,
        precision=precision,
        aux=aux_vec,
        aux_distances=aux_distances,
        aux_loss=float(aux_loss),
    )


def packed_address(j: int, e: int, dim: int, l: int, k_max: int, d: int | None = None) -> int:
    """Linear offset of (set j, element e, dimension dim) in a packed buffer."""
    if not 0 <= j < l:
        raise IndexError(f"set index {j} out of range [0, {l})")
    if not 0 <= e < k_max:
        raise IndexError(f"element index {e} out of range [0, {k_max})")
    if dim < 0 or (d is not None and dim >= d):
        raise IndexError(f"dimension index {dim} out of range")
    return dim * (k_max * l) + e * l + j


def pack_batch(batch: EvaluationBatch, precision: Precision) -> PackedBatch:
    """Interleave the batch round-robin, pad to k_max and vectorize row-wise."""
    d, k_max, l = batch.d, batch.k_max, batch.l
    values = np.zeros((d, k_max, l), dtype=precision.dtype)
    for j, elems in enumerate(batch.sets):
        values[:, : batch.cardinalities[j], j] = elems.T.astype(precision.dtype)
    flat = values.reshape(-1)
    flat.flags.writeable = False
    return PackedBatch(
        values=flat,
        l=l,
        k_max=k_max,
        d=d,
        cardinalities=batch.cardinalities,
        precision=precision,
    )


def compute_kernel_config(
    n: int, l: int, gamma: int, limits: DeviceLimits | None = None
) -> KernelConfig:
    """Derive block and grid dimensions for an n-column, l-row work matrix.

    The block is grown in the set direction first (as many rows as fit into
    one block), then in the ground direction as far as the remaining thread
    budget and the staging-memory budget allow.
    """
    if limits is None:
        limits = DeviceLimits()
    if n < 1 or l < 1 or gamma < 1:
        raise ValueError("n, l and gamma must all be >= 1")

    threads = limits.max_threads_per_block
    b_y = min(threads, l)
    b_x = min(threads // b_y, limits.shared_memory_bytes // gamma)
    if b_x == 0:
        raise SharedMemoryOverflowError(
            f"one ground vector needs {gamma} bytes but only "
            f"{limits.shared_memory_bytes} bytes of staging memory are available"
        )
    g_x = math.ceil(n / b_x)
    g_y = math.ceil(l / b_y)
    return KernelConfig(
        block=(b_x, b_y, 1),
        grid=(g_x, g_y, 1),
        shared_bytes_per_block=b_x * gamma,
    )


def count_transactions(
    addresses: Iterable[tuple], limits: DeviceLimits | None = None
) -> int:
    """Number of distinct aligned segments touched by one warp's accesses.

    ``addresses`` holds one (byte_offset, byte_width) pair per active lane.
    Accesses falling into the same segment coalesce into one transaction.
    """
    if limits is None:
        limits = DeviceLimits()
    lanes = list(addresses)
    if len(lanes) > limits.warp_size:
        raise ValueError(
            f"{len(lanes)} lanes exceed the warp size of {limits.warp_size}"
        )
    seg = limits.segment_bytes
    touched = set()
    for offset, width in lanes:
        if width <= 0:
            raise ValueError("access width must be positive")
        if offset < 0:
            raise ValueError("byte offset must be non-negative")
        touched.update(range(offset // seg, (offset + width - 1) // seg + 1))
    return len(touched)
