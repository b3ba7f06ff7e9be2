"""Walk sampler: uniformity, rejection bookkeeping, sample-size bound."""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from tgkernels.errors import (
    CountOverflowError,
    GraphValidationError,
    KernelMismatchError,
    NoWalkError,
    RetryBudgetError,
)
from tgkernels.sampling import (
    SampleBoundInputs,
    SamplerConfig,
    approx_feature_map,
    approx_kernel,
    exact_normalized_feature_map,
    has_temporal_walk,
    sample_size,
    sample_temporal_walk,
    sample_walk_slots,
    temporal_sequence_key,
    walk_pattern_bound,
)
from tgkernels.seeding import derive_rng
from tgkernels.temporal import (
    TemporalEdge,
    TemporalGraph,
    enumerate_temporal_walks,
    label_sequence,
)

from conftest import random_small_graph


def time_path(k: int) -> TemporalGraph:
    """Path of k edges with times 1..k: exactly one temporal k-walk."""
    return TemporalGraph(
        k + 1, tuple(TemporalEdge(i, i + 1, i + 1) for i in range(k))
    )


class TestSampleSize:
    def test_worked_example(self):
        b = SampleBoundInputs(collection_size=100, pattern_bound=1000, delta=0.05, accuracy=0.1)
        s = sample_size(b)
        expected = math.ceil(math.log(2 * 100 * 1000 / 0.05) / (2 * (0.1 / 1000) ** 2))
        assert s == expected
        assert abs(s - 7.6009e8) < 1e6

    def test_accuracy_scaling(self):
        base = SampleBoundInputs(collection_size=10, pattern_bound=50, delta=0.1, accuracy=0.1)
        scaled = SampleBoundInputs(
            collection_size=10, pattern_bound=50, delta=0.1, accuracy=0.1 * math.sqrt(10)
        )
        assert abs(sample_size(base) / sample_size(scaled) - 10.0) < 1e-3

    def test_delta_halving_additive(self):
        kwargs = dict(collection_size=10, pattern_bound=50, accuracy=0.1)
        s1 = sample_size(SampleBoundInputs(delta=0.2, **kwargs))
        s2 = sample_size(SampleBoundInputs(delta=0.1, **kwargs))
        increment = math.log(2) / (2 * (0.1 / 50) ** 2)
        assert abs((s2 - s1) - increment) <= 1.0

    def test_overflow_rejected(self):
        with pytest.raises(CountOverflowError):
            sample_size(
                SampleBoundInputs(
                    collection_size=10, pattern_bound=10**40, delta=0.1, accuracy=0.1
                )
            )

    def test_pattern_bound_helper(self):
        assert walk_pattern_bound(3, 2) == 3**4
        assert walk_pattern_bound(2, 5) == 2**10

    def test_invalid_inputs(self):
        with pytest.raises(GraphValidationError):
            SampleBoundInputs(collection_size=0, pattern_bound=1, delta=0.1, accuracy=0.1)
        with pytest.raises(GraphValidationError):
            SampleBoundInputs(collection_size=1, pattern_bound=1, delta=1.0, accuracy=0.1)

    def test_sampler_config_invariants(self):
        with pytest.raises(GraphValidationError):
            SamplerConfig(k=0, samples=10)
        with pytest.raises(GraphValidationError):
            SamplerConfig(k=1, samples=0)
        with pytest.raises(GraphValidationError):
            SamplerConfig(k=1, samples=1, max_restarts=0)


class TestHasWalk:
    def test_path(self):
        g = time_path(4)
        assert has_temporal_walk(g, 4)
        assert not has_temporal_walk(g, 5)

    def test_equal_times(self):
        g = TemporalGraph(3, (TemporalEdge(0, 1, 2), TemporalEdge(1, 2, 2)))
        assert has_temporal_walk(g, 1)
        assert not has_temporal_walk(g, 2)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_enumeration(self, seed):
        g = random_small_graph(np.random.default_rng(seed))
        for k in range(1, 5):
            assert has_temporal_walk(g, k) == bool(enumerate_temporal_walks(g, k))


class TestSingleWalkSampler:
    def test_unique_path_walk(self):
        g = time_path(3)
        rng = derive_rng(5)
        w = sample_temporal_walk(g, 3, rng)
        assert w.vertices == (0, 1, 2, 3)

    def test_triangle_unique_k3(self, triangle_graph):
        rng = derive_rng(7)
        for _ in range(5):
            w = sample_temporal_walk(triangle_graph, 3, rng)
            assert w.vertices == (2, 0, 1, 2)
            assert tuple(e.t for e in w.edges) == (2, 3, 7)

    def test_no_walk_error(self):
        star = TemporalGraph(
            4, (TemporalEdge(0, 1, 5), TemporalEdge(0, 2, 5), TemporalEdge(0, 3, 5))
        )
        with pytest.raises(NoWalkError):
            sample_temporal_walk(star, 2, derive_rng(0), max_restarts=50)

    def test_retry_budget_error(self):
        # walks exist but the acceptance ratio is small; a single restart
        # is all but guaranteed to fail for some seed
        g = TemporalGraph(
            6,
            tuple(TemporalEdge(0, v, t) for v in range(1, 6) for t in (1, 2, 3))
            + (TemporalEdge(1, 2, 9),),
        )
        assert has_temporal_walk(g, 3)
        with pytest.raises(RetryBudgetError):
            for seed in range(50):
                sample_temporal_walk(g, 3, derive_rng(seed), max_restarts=1)

    def test_walks_are_valid(self, triangle_graph):
        rng = derive_rng(11)
        for _ in range(20):
            w = sample_temporal_walk(triangle_graph, 2, rng)
            times = [e.t for e in w.edges]
            assert all(a < b for a, b in zip(times, times[1:]))


class TestBatchSampler:
    def test_matches_enumerated_support(self, triangle_graph):
        rows = sample_walk_slots(triangle_graph, 2, 400, derive_rng(3))
        valid = {
            tuple(e.t for e in w.edges): w.vertices
            for w in enumerate_temporal_walks(triangle_graph, 2)
        }
        from tgkernels.sampling import _WalkIndex, _walk_from_slots

        index = _WalkIndex(triangle_graph)
        for row in rows:
            w = _walk_from_slots(triangle_graph, index, row)
            assert tuple(e.t for e in w.edges) in valid

    def test_uniform_on_small_graph(self):
        g = TemporalGraph(
            5,
            (
                TemporalEdge(0, 1, 1),
                TemporalEdge(1, 2, 2),
                TemporalEdge(1, 3, 2),
                TemporalEdge(2, 4, 3),
                TemporalEdge(3, 4, 4),
            ),
        )
        k = 3
        walks = enumerate_temporal_walks(g, k)
        n = len(walks)
        assert 2 <= n <= 12
        samples = 20_000
        rows = sample_walk_slots(g, k, samples, derive_rng(17))
        counts = Counter(map(tuple, rows))
        assert len(counts) == n
        tv = 0.5 * sum(abs(c / samples - 1 / n) for c in counts.values())
        assert tv < 0.05

    def test_reproducible(self, triangle_graph):
        a = sample_walk_slots(triangle_graph, 2, 100, derive_rng(21))
        b = sample_walk_slots(triangle_graph, 2, 100, derive_rng(21))
        assert np.array_equal(a, b)

    def test_no_rejection_still_valid(self, triangle_graph):
        rows = sample_walk_slots(triangle_graph, 2, 200, derive_rng(5), rejection=False)
        assert rows.shape == (200, 2)


class TestApproxFeatureMap:
    def test_unique_walk_single_entry(self):
        g = time_path(3)
        fv = approx_feature_map(g, SamplerConfig(k=3, samples=64, seed=1))
        assert len(fv.counts) == 1
        assert fv.l1_norm == 1

    def test_sums_to_one_exactly(self, triangle_graph):
        fv = approx_feature_map(triangle_graph, SamplerConfig(k=2, samples=777, seed=3))
        assert fv.l1_norm == Fraction(1)
        assert all(Fraction(c, 777) <= 1 for c in fv.counts.values())

    def test_reproducible(self, triangle_graph):
        cfg = SamplerConfig(k=2, samples=500, seed=99)
        assert approx_feature_map(triangle_graph, cfg).counts == approx_feature_map(triangle_graph, cfg).counts

    def test_close_to_exact_distribution(self):
        g = TemporalGraph(
            5,
            (
                TemporalEdge(0, 1, 1),
                TemporalEdge(1, 2, 2),
                TemporalEdge(1, 3, 2),
                TemporalEdge(2, 4, 3),
                TemporalEdge(3, 4, 4),
            ),
            labels=(),
        )
        exact = exact_normalized_feature_map(g, 2)
        approx = approx_feature_map(g, SamplerConfig(k=2, samples=20_000, seed=13))
        keys = set(exact.counts) | set(approx.counts)
        tv = 0.5 * sum(
            abs(
                Fraction(exact.counts.get(kk, 0), exact.denom)
                - Fraction(approx.counts.get(kk, 0), approx.denom)
            )
            for kk in keys
        )
        assert tv < 0.05

    def test_matches_label_sequences(self, triangle_graph):
        fv = approx_feature_map(triangle_graph, SamplerConfig(k=3, samples=32, seed=5))
        (w,) = enumerate_temporal_walks(triangle_graph, 3)
        key = temporal_sequence_key(label_sequence(triangle_graph, w))
        assert fv.counts == {key: 32}

    def test_no_walk_propagates(self):
        star = TemporalGraph(3, (TemporalEdge(0, 1, 4), TemporalEdge(0, 2, 4)))
        with pytest.raises(NoWalkError):
            approx_feature_map(star, SamplerConfig(k=2, samples=10, seed=0, max_restarts=20))


class TestApproxKernel:
    def test_identical_concentrated(self):
        f = approx_feature_map(time_path(2), SamplerConfig(k=2, samples=50, seed=2))
        assert approx_kernel(f, f) == 1.0

    def test_disjoint(self):
        f1 = exact_normalized_feature_map(time_path(2), 2)
        g2 = time_path(2).with_labels(
            [__import__("tgkernels").LabelTimeline.constant("z")] * 3
        )
        f2 = exact_normalized_feature_map(g2, 2)
        assert approx_kernel(f1, f2) == 0.0

    def test_param_mismatch(self):
        f1 = exact_normalized_feature_map(time_path(2), 2)
        f2 = exact_normalized_feature_map(time_path(3), 3)
        with pytest.raises(KernelMismatchError):
            approx_kernel(f1, f2)

    def test_range(self, triangle_graph):
        f1 = approx_feature_map(triangle_graph, SamplerConfig(k=2, samples=400, seed=1))
        f2 = approx_feature_map(triangle_graph, SamplerConfig(k=2, samples=400, seed=2))
        assert 0.0 <= approx_kernel(f1, f2) <= 1.0

    def test_error_shrinks_with_samples(self):
        g1 = TemporalGraph(
            4,
            (
                TemporalEdge(0, 1, 1),
                TemporalEdge(1, 2, 2),
                TemporalEdge(1, 3, 3),
                TemporalEdge(2, 3, 4),
            ),
        )
        g2 = time_path(3)
        exact = approx_kernel(
            exact_normalized_feature_map(g1, 2), exact_normalized_feature_map(g2, 2)
        )
        medians = []
        for s in (100, 1000):
            errs = []
            for trial in range(30):
                f1 = approx_feature_map(g1, SamplerConfig(k=2, samples=s, seed=trial))
                f2 = approx_feature_map(g2, SamplerConfig(k=2, samples=s, seed=1000 + trial))
                errs.append(abs(approx_kernel(f1, f2) - exact))
            medians.append(float(np.median(errs)))
        assert medians[1] <= medians[0]
