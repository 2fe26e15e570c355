"""Tests for greedy selection, the exhaustive oracle and cluster labels."""

import math

import numpy as np
import pytest

from exembatch import (
    BudgetExceedsGroundSetError,
    EmptyEvaluationSetError,
    Evaluator,
    InstanceTooLargeError,
    Precision,
    assign_clusters,
    brute_force_optimum,
    build_ground_set,
    greedy_maximize,
)


def line_ground():
    return build_ground_set([[1.0], [3.0]], precision=Precision.binary64)


class TestGreedy:
    def test_single_step(self):
        result = greedy_maximize(line_ground(), k=1)
        assert result.exemplar_indices == (1,)
        assert result.values == (4.5,)
        assert result.evaluations == 2

    def test_two_steps(self):
        result = greedy_maximize(line_ground(), k=2)
        assert result.exemplar_indices == (1, 0)
        assert result.values == (4.5, 5.0)
        assert result.evaluations == 3

    def test_zero_budget(self):
        result = greedy_maximize(line_ground(), k=0)
        assert result.exemplar_indices == ()
        assert result.values == ()
        assert result.evaluations == 0

    def test_budget_exceeds_ground(self):
        with pytest.raises(BudgetExceedsGroundSetError):
            greedy_maximize(line_ground(), k=3)

    def test_evaluation_count(self):
        rng = np.random.default_rng(101)
        g = build_ground_set(rng.random((9, 2)), precision=Precision.binary64)
        result = greedy_maximize(g, k=4)
        assert result.evaluations == sum(9 - i for i in range(4))

    def test_values_nondecreasing(self):
        rng = np.random.default_rng(103)
        g = build_ground_set(rng.random((15, 3)), precision=Precision.binary64)
        result = greedy_maximize(g, k=5)
        vals = result.values
        assert all(vals[i] <= vals[i + 1] + 1e-12 for i in range(len(vals) - 1))
        assert len(set(result.exemplar_indices)) == 5

    def test_tie_break_lowest_index(self):
        # Two identical observations: the first one must win.
        g = build_ground_set([[2.0], [2.0], [1.0]], precision=Precision.binary64)
        result = greedy_maximize(g, k=1)
        assert result.exemplar_indices == (0,)

    @pytest.mark.parametrize("backend", ["reference", "parallel", "tiled"])
    def test_backend_independent_selection(self, backend):
        rng = np.random.default_rng(107)
        g = build_ground_set(rng.random((20, 3)), precision=Precision.binary64)
        base = greedy_maximize(g, k=4)
        other = greedy_maximize(g, k=4, evaluator=Evaluator(backend, worker_count=2))
        assert other.exemplar_indices == base.exemplar_indices

    def test_memory_budget_does_not_change_selection(self):
        rng = np.random.default_rng(109)
        g = build_ground_set(rng.random((12, 2)), precision=Precision.binary64)
        base = greedy_maximize(g, k=3)
        from exembatch import estimate_set_memory

        budget = 3 * estimate_set_memory(12, 3, 2, Precision.binary64)
        chunked = greedy_maximize(g, k=3, memory_budget=budget)
        assert chunked.exemplar_indices == base.exemplar_indices
        assert chunked.values == base.values

    def test_guarantee_against_oracle(self):
        rng = np.random.default_rng(113)
        factor = 1.0 - math.exp(-1.0)
        for _ in range(30):
            n = int(rng.integers(4, 13))
            k = int(rng.integers(1, 4))
            g = build_ground_set(rng.random((n, 2)), precision=Precision.binary64)
            greedy = greedy_maximize(g, k=k)
            _, optimum = brute_force_optimum(g, k)
            assert greedy.values[-1] >= factor * optimum - 1e-12


class TestBruteForce:
    def test_hand_example(self):
        best, value = brute_force_optimum(line_ground(), 1)
        assert best == (1,)
        assert value == 4.5

    def test_zero_budget(self):
        assert brute_force_optimum(line_ground(), 0) == ((), 0.0)

    def test_budget_error(self):
        with pytest.raises(BudgetExceedsGroundSetError):
            brute_force_optimum(line_ground(), 5)

    def test_blowup_guard(self):
        rng = np.random.default_rng(127)
        g = build_ground_set(rng.random((64, 1)), precision=Precision.binary64)
        with pytest.raises(InstanceTooLargeError):
            brute_force_optimum(g, 32)


class TestAssignClusters:
    def test_hand_labels(self):
        g = build_ground_set(
            [[0.0], [1.0], [9.0], [10.0]], precision=Precision.binary64
        )
        labels = assign_clusters(g, [[0.5], [9.5]])
        assert labels.tolist() == [0, 0, 1, 1]

    def test_tie_goes_to_lowest_exemplar(self):
        g = build_ground_set([[5.0]], precision=Precision.binary64)
        labels = assign_clusters(g, [[4.0], [6.0]])
        assert labels.tolist() == [0]

    def test_empty_exemplars_rejected(self):
        with pytest.raises(EmptyEvaluationSetError):
            assign_clusters(line_ground(), [])

    def test_every_point_nearest(self):
        rng = np.random.default_rng(131)
        data = rng.random((50, 3))
        g = build_ground_set(data, precision=Precision.binary64)
        exemplars = data[[3, 17, 40]]
        labels = assign_clusters(g, exemplars)
        dists = ((data[:, None, :] - exemplars[None, :, :]) ** 2).sum(axis=2)
        assert np.array_equal(labels, np.argmin(dists, axis=1))
