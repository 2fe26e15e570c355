"""Dissimilarities, the representative-subset objective and its derivatives.

The objective scores a candidate set by how much it lowers the mean
nearest-representative distance compared to a fixed reference vector. It is
monotone and has diminishing returns, which is what the greedy optimizer
relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import COL_BLOCK, GroundSet
from .errors import (
    DimensionMismatchError,
    EmptyEvaluationSetError,
    InvalidDataError,
)


@dataclass(frozen=True)
class Dissimilarity:
    """A non-negative dissimilarity between two vectors.

    Only non-negativity is required; symmetry and the triangle inequality
    are not assumed. ``batch`` is an optional vectorized form mapping an
    (m, d) block and a (q, d) element matrix to an (m, q) distance matrix;
    when absent, the scalar ``pairwise`` function is looped.
    """

    name: str
    pairwise: Callable
    batch: Optional[Callable] = None
    requires_equal_dims: bool = True

    def __call__(self, x, y) -> float:
        return self.pairwise(x, y)

    def distances(self, block: np.ndarray, elems: np.ndarray) -> np.ndarray:
        """Distance matrix between every block row and every element row."""
        if self.requires_equal_dims and block.shape[1] != elems.shape[1]:
            raise DimensionMismatchError(
                f"cannot compare {block.shape[1]}-dim and {elems.shape[1]}-dim vectors"
            )
        if self.batch is not None:
            out = self.batch(block, elems)
        else:
            out = np.empty((block.shape[0], elems.shape[0]), dtype=block.dtype)
            for a in range(block.shape[0]):
                for b in range(elems.shape[0]):
                    out[a, b] = self.pairwise(block[a], elems[b])
        if np.isnan(out).any():
            raise InvalidDataError(f"dissimilarity {self.name!r} produced NaN")
        if __debug__ and out.size and float(out.min()) < 0:
            raise InvalidDataError(
                f"dissimilarity {self.name!r} produced a negative value"
            )
        return out


def squared_euclidean(x, y) -> float:
    """Sum of squared coordinate differences between two vectors."""
    xa, ya = np.asarray(x), np.asarray(y)
    if xa.shape != ya.shape:
        raise DimensionMismatchError(
            f"cannot compare vectors of shapes {xa.shape} and {ya.shape}"
        )
    diff = xa - ya
    return float(np.sum(diff * diff))


def _squared_euclidean_batch(block: np.ndarray, elems: np.ndarray) -> np.ndarray:
    if block.dtype == np.float16:
        # Half precision is emulated: every intermediate rounds to binary16.
        diff = block[:, None, :] - elems[None, :, :]
        np.multiply(diff, diff, out=diff)
        return diff.sum(axis=2, dtype=np.float16)
    # ||v - s||^2 = ||v||^2 - 2 v.s + ||s||^2 via one GEMM; clamp the tiny
    # negatives that cancellation can produce.
    b2 = np.einsum("ij,ij->i", block, block)
    e2 = np.einsum("ij,ij->i", elems, elems)
    out = block @ elems.T
    out *= -2.0
    out += b2[:, None]
    out += e2[None, :]
    np.maximum(out, 0, out=out)
    return out


SQUARED_EUCLIDEAN = Dissimilarity(
    name="squared_euclidean",
    pairwise=squared_euclidean,
    batch=_squared_euclidean_batch,
)


def _as_elements(ground: GroundSet, elements) -> np.ndarray:
    """Coerce an evaluation set into an (m, d) array at the ground precision."""
    arr = np.asarray(elements, dtype=ground.precision.dtype)
    if arr.size == 0:
        return np.empty((0, ground.d), dtype=ground.precision.dtype)
    arr = np.atleast_2d(arr)
    if arr.shape[1] != ground.d:
        raise DimensionMismatchError(
            f"set elements are {arr.shape[1]}-dim but the ground set is {ground.d}-dim"
        )
    return arr


def min_distances(
    ground: GroundSet,
    elems: np.ndarray,
    dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN,
    include_aux: bool = True,
) -> np.ndarray:
    """Per-observation minimum distance to the given elements.

    Sweeps the ground set in fixed-width column blocks so that results do
    not depend on how callers parallelize or chunk the surrounding work.
    With ``include_aux`` the precomputed reference distances join the
    minimum, which turns this into the per-point partial loss of the set
    extended by the reference vector.
    """
    n = ground.n
    dtype = ground.precision.dtype
    t = np.empty(n, dtype=dtype)
    for start in range(0, n, COL_BLOCK):
        stop = min(start + COL_BLOCK, n)
        block = ground.matrix[start:stop]
        if elems.shape[0]:
            dmat = dissimilarity.distances(block, elems)
            tmin = dmat.min(axis=1).astype(dtype, copy=False)
        else:
            tmin = np.full(stop - start, ground.precision.max_finite, dtype=dtype)
        if include_aux:
            tmin = np.minimum(tmin, ground.aux_distances[start:stop])
        t[start:stop] = tmin
    return t


def kmedoids_loss(
    ground: GroundSet, set_vectors, dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN
) -> float:
    """Mean distance of every observation to its nearest set element."""
    elems = _as_elements(ground, set_vectors)
    if elems.shape[0] == 0:
        raise EmptyEvaluationSetError("the loss minimizes over a non-empty set")
    t = min_distances(ground, elems, dissimilarity, include_aux=False)
    per_point = t / ground.precision.dtype.type(ground.n)
    return float(np.sum(per_point, dtype=ground.precision.accumulate_dtype))


def exemplar_value(
    ground: GroundSet, set_vectors, dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN
) -> float:
    """Representativity of a set: reference loss minus extended-set loss."""
    elems = _as_elements(ground, set_vectors)
    if elems.shape[0] == 0:
        return 0.0
    t = min_distances(ground, elems, dissimilarity, include_aux=True)
    per_point = t / ground.precision.dtype.type(ground.n)
    acc = ground.precision.accumulate_dtype
    loss = np.sum(per_point, dtype=acc)
    return float(acc.type(ground.aux_loss) - loss)


def point_loss(
    ground: GroundSet,
    i: int,
    set_vectors,
    dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN,
) -> float:
    """Per-observation partial loss of the reference-extended set.

    Summing this over all observations reproduces the loss of the set
    extended by the reference vector.
    """
    if not 0 <= i < ground.n:
        raise IndexError(f"point index {i} out of range [0, {ground.n})")
    elems = _as_elements(ground, set_vectors)
    dtype = ground.precision.dtype
    if elems.shape[0]:
        # Evaluate through the same column block the vectorized sweep uses,
        # so per-point values recompose into the whole-set loss exactly.
        start = (i // COL_BLOCK) * COL_BLOCK
        stop = min(start + COL_BLOCK, ground.n)
        dmat = dissimilarity.distances(ground.matrix[start:stop], elems)
        tmin = dmat.min(axis=1).astype(dtype, copy=False)[i - start]
        tmin = min(tmin, ground.aux_distances[i])
    else:
        tmin = ground.aux_distances[i]
    return float(dtype.type(tmin) / dtype.type(ground.n))


def marginal_gain(
    ground: GroundSet,
    set_vectors,
    element,
    dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN,
) -> float:
    """Discrete derivative: value gained by adding one element to a set."""
    base = _as_elements(ground, set_vectors)
    extra = _as_elements(ground, element)
    extended = np.vstack([base, extra]) if base.shape[0] else extra
    return exemplar_value(ground, extended, dissimilarity) - exemplar_value(
        ground, base, dissimilarity
    )
