"""Tests for the evaluation backends and memory-budget chunking."""

import dataclasses

import numpy as np
import pytest

from exembatch import (
    DeviceLimits,
    DimensionMismatchError,
    EvaluationBatch,
    Evaluator,
    OutOfMemoryError,
    Precision,
    build_ground_set,
    estimate_set_memory,
    evaluate_batch,
    evaluate_chunked,
    evaluate_single,
    exemplar_value,
    pack_batch,
    plan_chunks,
    tiled_evaluate,
)

from _util import random_instance


class TestEvaluateSingle:
    def test_hand_values(self):
        g = build_ground_set([[1.0], [3.0]], precision=Precision.binary64)
        assert evaluate_single(g, [[3.0]]) == 4.5
        g2 = build_ground_set([[0.0], [2.0]], precision=Precision.binary64)
        assert evaluate_single(g2, [[2.0]]) == 2.0

    def test_empty_set(self):
        g = build_ground_set([[1.0]])
        assert evaluate_single(g, []) == 0.0

    def test_dim_mismatch(self):
        g = build_ground_set([[1.0]])
        with pytest.raises(DimensionMismatchError):
            evaluate_single(g, [[1.0, 2.0]])

    def test_matches_objective(self):
        rng = np.random.default_rng(41)
        g, batch = random_instance(rng, n=30, d=3, l=5, k=4)
        for elems in batch.sets:
            assert evaluate_single(g, elems) == pytest.approx(
                exemplar_value(g, elems), rel=1e-12
            )


class TestEvaluator:
    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            Evaluator(backend="gpu")

    def test_bad_workers(self):
        with pytest.raises(ValueError):
            Evaluator(worker_count=0)

    def test_precision_mismatch(self):
        g = build_ground_set([[1.0]], precision=Precision.binary32)
        batch = EvaluationBatch.from_sets([[[1.0]]])
        ev = Evaluator(precision=Precision.binary64)
        with pytest.raises(ValueError):
            evaluate_batch(ev, g, batch)


class TestBackendEquivalence:
    def test_hand_batch(self):
        g = build_ground_set([[1.0], [3.0]], precision=Precision.binary64)
        batch = EvaluationBatch.from_sets([[[3.0]], [[1.0]], [[1.0], [3.0]]])
        for backend in ("reference", "parallel", "tiled"):
            vals = evaluate_batch(Evaluator(backend), g, batch)
            assert vals.tolist() == [4.5, 3.0, 5.0]

    @pytest.mark.parametrize("precision,rtol", [
        (Precision.binary32, 1e-5),
        (Precision.binary64, 1e-12),
    ])
    def test_random_instances(self, precision, rtol):
        rng = np.random.default_rng(43)
        for _ in range(25):
            g, batch = random_instance(rng, precision=precision)
            ref = evaluate_batch(Evaluator("reference"), g, batch)
            for backend in ("parallel", "tiled"):
                ev = Evaluator(backend, worker_count=int(rng.integers(1, 5)))
                vals = evaluate_batch(ev, g, batch)
                np.testing.assert_allclose(vals, ref, rtol=rtol, atol=rtol)

    def test_identical_sets_identical_outputs(self):
        rng = np.random.default_rng(47)
        g, _ = random_instance(rng, n=20, d=4, l=1, k=3)
        elems = g.matrix[:3]
        batch = EvaluationBatch.from_sets([elems] * 8)
        for backend in ("reference", "parallel", "tiled"):
            vals = evaluate_batch(Evaluator(backend, worker_count=3), g, batch)
            assert np.all(vals == vals[0])

    def test_determinism(self):
        rng = np.random.default_rng(53)
        g, batch = random_instance(rng, precision=Precision.binary32)
        for backend in ("reference", "parallel", "tiled"):
            ev = Evaluator(backend, worker_count=3)
            first = evaluate_batch(ev, g, batch)
            for _ in range(3):
                again = evaluate_batch(ev, g, batch)
                assert np.array_equal(first, again)

    def test_parallel_matches_reference_bitwise(self):
        # Both paths sweep identical fixed column blocks, so they agree
        # exactly, for any worker count and in both partitioning regimes.
        rng = np.random.default_rng(59)
        g, batch = random_instance(rng, n=60, d=5, l=3, k=4)
        ref = evaluate_batch(Evaluator("reference"), g, batch)
        for workers in (1, 2, 5):
            par = evaluate_batch(Evaluator("parallel", worker_count=workers), g, batch)
            assert np.array_equal(ref, par)


class TestTiledModel:
    def test_instrumented_matches_fast_path(self):
        rng = np.random.default_rng(61)
        g, batch = random_instance(rng, n=40, d=3, l=6, k=4,
                                   precision=Precision.binary32)
        limits = DeviceLimits(max_threads_per_block=16, shared_memory_bytes=256,
                              warp_size=8)
        packed = pack_batch(batch, g.precision)
        fast = tiled_evaluate(g, packed, limits=limits)
        slow, loads = tiled_evaluate(g, packed, limits=limits, instrument=True)
        np.testing.assert_allclose(fast, slow, rtol=1e-6)
        assert loads.shape == (g.n,)

    def test_staging_loads_once_per_covering_block(self):
        rng = np.random.default_rng(67)
        g, batch = random_instance(rng, n=37, d=2, l=5, k=3,
                                   precision=Precision.binary32)
        limits = DeviceLimits(max_threads_per_block=8, shared_memory_bytes=64,
                              warp_size=4)
        packed = pack_batch(batch, g.precision)
        from exembatch import compute_kernel_config

        cfg = compute_kernel_config(g.n, batch.l, g.bytes_per_vector, limits)
        _, loads = tiled_evaluate(g, packed, limits=limits, instrument=True)
        # Every vector is staged exactly once per block covering its column;
        # the blocks covering column i are the g_y blocks of its x-slice.
        assert np.all(loads == cfg.grid[1])

    def test_blank_slots_never_read(self):
        rng = np.random.default_rng(71)
        g, batch = random_instance(rng, n=25, d=3, l=4,
                                   precision=Precision.binary32)
        # Force unequal cardinalities so padding exists.
        sets = [batch.sets[0][:1]] + list(batch.sets[1:])
        batch = EvaluationBatch.from_sets(sets)
        packed = pack_batch(batch, g.precision)
        assert packed.blank_slots > 0
        baseline = tiled_evaluate(g, packed)

        poisoned = packed.values.copy()
        mat = poisoned.reshape(packed.d, packed.k_max, packed.l)
        for j, card in enumerate(packed.cardinalities):
            mat[:, card:, j] = 1e9
        perturbed = dataclasses.replace(packed, values=poisoned)
        assert np.array_equal(tiled_evaluate(g, perturbed), baseline)


class TestSetMemoryEstimate:
    def test_examples(self):
        assert estimate_set_memory(50000, 10, 100, Precision.binary32) == 204016
        assert estimate_set_memory(1, 1, 1, Precision.binary16) == 20

    def test_monotone(self):
        base = estimate_set_memory(100, 5, 8, Precision.binary32)
        assert estimate_set_memory(101, 5, 8, Precision.binary32) >= base
        assert estimate_set_memory(100, 6, 8, Precision.binary32) >= base
        assert estimate_set_memory(100, 5, 9, Precision.binary32) >= base

    def test_invalid(self):
        with pytest.raises(ValueError):
            estimate_set_memory(0, 1, 1, Precision.binary32)


class TestPlanChunks:
    def test_example(self):
        plan = plan_chunks(1000, 300, 10)
        assert (plan.chunk_size, plan.chunk_count) == (3, 4)

    def test_out_of_memory(self):
        with pytest.raises(OutOfMemoryError):
            plan_chunks(100, 300, 10)

    def test_everything_fits(self):
        plan = plan_chunks(10**9, 300, 10)
        assert (plan.chunk_size, plan.chunk_count) == (10, 1)


class TestEvaluateChunked:
    def _budget_for(self, g, batch, precision, chunk_size):
        mu = estimate_set_memory(g.n, batch.k_max, batch.d, precision)
        return mu * chunk_size

    @pytest.mark.parametrize("backend", ["reference", "parallel", "tiled"])
    def test_bit_identical_to_unchunked(self, backend):
        rng = np.random.default_rng(73)
        g, batch = random_instance(rng, n=30, d=4, l=10, precision=Precision.binary32)
        ev = Evaluator(backend, worker_count=3)
        whole = evaluate_batch(ev, g, batch)
        for chunk_size in (10, 5, 3, 2, 1):
            budget = self._budget_for(g, batch, g.precision, chunk_size)
            chunked = evaluate_chunked(ev, g, batch, budget=budget)
            assert np.array_equal(chunked, whole), chunk_size

    def test_single_set(self):
        rng = np.random.default_rng(79)
        g, batch = random_instance(rng, n=10, d=2, l=1, k=2)
        ev = Evaluator("reference")
        budget = self._budget_for(g, batch, g.precision, 1)
        assert evaluate_chunked(ev, g, batch, budget=budget).shape == (1,)

    def test_propagates_out_of_memory(self):
        rng = np.random.default_rng(83)
        g, batch = random_instance(rng, n=10, d=2, l=3, k=2)
        with pytest.raises(OutOfMemoryError):
            evaluate_chunked(Evaluator("reference"), g, batch, budget=1)


class TestHalfPrecision:
    def test_matches_binary32_loosely(self):
        rng = np.random.default_rng(89)
        data = rng.random((64, 32), dtype=np.float32)
        sets_idx = [np.sort(rng.choice(64, size=5, replace=False)) for _ in range(8)]

        g32 = build_ground_set(data, precision=Precision.binary32)
        g16 = build_ground_set(data, precision=Precision.binary16)
        b32 = EvaluationBatch.from_sets([g32.matrix[i] for i in sets_idx])
        b16 = EvaluationBatch.from_sets([g16.matrix[i] for i in sets_idx])
        for backend in ("reference", "tiled"):
            v32 = evaluate_batch(Evaluator(backend), g32, b32)
            v16 = evaluate_batch(Evaluator(backend), g16, b16)
            np.testing.assert_allclose(v16, v32, rtol=5e-2, atol=5e-2)

    def test_packed_half_buffer_is_half_size(self):
        rng = np.random.default_rng(97)
        _, batch = random_instance(rng, n=20, d=8, l=6, k=3)
        p16 = pack_batch(batch, Precision.binary16)
        p32 = pack_batch(batch, Precision.binary32)
        assert p16.values.nbytes * 2 == p32.values.nbytes
