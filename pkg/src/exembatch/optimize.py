"""Greedy subset selection, a brute-force oracle and cluster assignment."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import EvaluationBatch, GroundSet
from .errors import (
    BudgetExceedsGroundSetError,
    EmptyEvaluationSetError,
    InstanceTooLargeError,
)
from .evaluate import Evaluator, evaluate_batch, evaluate_chunked, evaluate_single
from .objective import SQUARED_EUCLIDEAN, Dissimilarity

BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class OptimizationResult:
    """Selected exemplar indices, the value trajectory and the work done."""

    exemplar_indices: tuple
    values: tuple
    evaluations: int


def greedy_maximize(
    ground: GroundSet,
    k: int,
    evaluator: Optional[Evaluator] = None,
    dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN,
    memory_budget: Optional[int] = None,
) -> OptimizationResult:
    """Select up to k exemplars, one argmax-gain candidate per step.

    Each step evaluates the current selection extended by every remaining
    ground observation as one batch. Ties in the argmax go to the lowest
    ground-set index. With ``memory_budget`` set, batches are evaluated in
    chunks that respect the budget.
    """
    if k > ground.n:
        raise BudgetExceedsGroundSetError(
            f"k={k} exceeds the {ground.n} available observations"
        )
    if evaluator is None:
        evaluator = Evaluator()
    if k <= 0:
        return OptimizationResult(exemplar_indices=(), values=(), evaluations=0)

    selected: list[int] = []
    values: list[float] = []
    evaluations = 0
    current = np.empty((0, ground.d), dtype=ground.precision.dtype)

    for _ in range(k):
        chosen = set(selected)
        candidates = [i for i in range(ground.n) if i not in chosen]
        sets = [np.vstack([current, ground.matrix[c : c + 1]]) for c in candidates]
        batch = EvaluationBatch.from_sets(sets)
        if memory_budget is not None:
            vals = evaluate_chunked(
                evaluator, ground, batch, dissimilarity, budget=memory_budget
            )
        else:
            vals = evaluate_batch(evaluator, ground, batch, dissimilarity)
        evaluations += len(candidates)
        best = int(np.argmax(vals))  # first max wins: lowest candidate index
        selected.append(candidates[best])
        values.append(float(vals[best]))
        current = np.vstack([current, ground.matrix[candidates[best] : candidates[best] + 1]])

    return OptimizationResult(
        exemplar_indices=tuple(selected),
        values=tuple(values),
        evaluations=evaluations,
    )


def brute_force_optimum(
    ground: GroundSet,
    k: int,
    dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN,
):
    """Exhaustive optimum over all subsets of size exactly k.

    Monotonicity makes a size-k set optimal among all sets of size at most
    k, so only size-k subsets need scoring. Guarded against combinatorial
    blowup.
    """
    if k > ground.n:
        raise BudgetExceedsGroundSetError(
            f"k={k} exceeds the {ground.n} available observations"
        )
    if k <= 0:
        return (), 0.0
    if math.comb(ground.n, k) > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(
            f"C({ground.n}, {k}) subsets exceed the exhaustive-search guard"
        )
    best_set: tuple = ()
    best_value = -math.inf
    for combo in itertools.combinations(range(ground.n), k):
        value = evaluate_single(ground, ground.matrix[list(combo)], dissimilarity)
        if value > best_value:
            best_set, best_value = combo, value
    return best_set, best_value


def assign_clusters(
    ground: GroundSet,
    exemplars,
    dissimilarity: Dissimilarity = SQUARED_EUCLIDEAN,
) -> np.ndarray:
    """Label every observation with its nearest exemplar's index.

    Ties go to the lowest exemplar index.
    """
    from .objective import _as_elements

    elems = _as_elements(ground, exemplars)
    if elems.shape[0] == 0:
        raise EmptyEvaluationSetError("cluster assignment needs at least one exemplar")
    labels = np.empty(ground.n, dtype=np.int64)
    from .core import COL_BLOCK

    for start in range(0, ground.n, COL_BLOCK):
        stop = min(start + COL_BLOCK, ground.n)
        dmat = dissimilarity.distances(ground.matrix[start:stop], elems)
        labels[start:stop] = np.argmin(dmat, axis=1)
    return labels
