import time
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treesearch import ConfidenceScore, Rng, SamplerKind, TokenDistribution, normalize_weights, sample_leaves, top_k_tokens
from treesearch.sampling import weighted_sample_without_replacement


def leaves_from(scores, start=0):
    return [(start + i, ConfidenceScore.from_linear(s)) for i, s in enumerate(scores)]


class TestRng:
    def test_splitmix64_reference_stream(self):
        # published reference outputs of splitmix64 for seed 1234567
        rng = Rng(1234567)
        assert [rng.next_u64() for _ in range(5)] == [
            6457827717110365317,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ]

    def test_floats_in_unit_interval(self):
        rng = Rng(3)
        xs = [rng.random() for _ in range(1000)]
        assert min(xs) >= 0.0 and max(xs) < 1.0

    def test_same_seed_same_stream(self):
        a, b = Rng(99), Rng(99)
        assert [a.random() for _ in range(20)] == [b.random() for _ in range(20)]


class TestNormalize:
    def test_proportional(self):
        assert normalize_weights([2, 3, 5]) == pytest.approx([0.2, 0.3, 0.5], abs=1e-15)

    def test_all_zero_is_uniform(self):
        assert normalize_weights([0, 0, 0]) == pytest.approx([1 / 3] * 3)

    def test_singleton(self):
        assert normalize_weights([0.7]) == [1.0]

    @pytest.mark.parametrize("bad", [[], [-1.0], [float("nan")]])
    def test_errors(self, bad):
        with pytest.raises(ValueError):
            normalize_weights(bad)

    @given(st.lists(st.floats(0, 1e6), min_size=1, max_size=50))
    def test_sums_to_one(self, scores):
        assert abs(sum(normalize_weights(scores)) - 1.0) < 1e-9


class TestSampleLeaves:
    @pytest.mark.parametrize("kind", list(SamplerKind))
    def test_clamps_to_population(self, kind):
        out = sample_leaves(kind, leaves_from([0.3, 0.6]), 5, Rng(1))
        assert sorted(out) == [0, 1]

    def test_top_k_leaves(self):
        assert sample_leaves("top_k_leaves", leaves_from([0.9, 0.1, 0.5]), 2, Rng(0)) == [0, 2]

    def test_top_k_tie_breaks_by_id(self):
        assert sample_leaves("top_k_leaves", leaves_from([0.5, 0.5, 0.5]), 2, Rng(0)) == [0, 1]

    def test_hybrid_stays_inside_pool(self):
        scores = [0.9, 0.01, 0.8, 0.02, 0.7, 0.03]
        for seed in range(50):
            picked = sample_leaves("hybrid", leaves_from(scores), 1, Rng(seed), hybrid_pool_factor=2)
            assert picked[0] in (0, 2)

    def test_empty_and_bad_batch(self):
        with pytest.raises(ValueError):
            sample_leaves("hybrid", [], 1, Rng(0))
        with pytest.raises(ValueError):
            sample_leaves("hybrid", leaves_from([0.5]), 0, Rng(0))

    def test_weighted_frequencies(self):
        rng = Rng(12345)
        leaves = leaves_from([0.2, 0.3, 0.5])
        counts = Counter(sample_leaves("normalized_confidence", leaves, 1, rng)[0] for _ in range(10_000))
        freqs = [counts[i] / 10_000 for i in range(3)]
        assert freqs == pytest.approx([0.2, 0.3, 0.5], abs=0.02)

    def test_marginal_is_exact_interval_mapping(self):
        # for a single draw, u in [0, 1) selects index i iff u*total falls in i's interval
        weights = [0.2, 0.3, 0.5]

        class FixedRng:
            def __init__(self, u):
                self.u = u

            def random(self):
                return self.u

        grid = np.arange(0, 1, 1 / 1000)
        picks = [weighted_sample_without_replacement(weights, 1, FixedRng(u))[0] for u in grid]
        counts = Counter(picks)
        assert [counts[i] / len(grid) for i in range(3)] == pytest.approx(weights, abs=1e-3)

    def test_zero_weights_drawn_last(self):
        out = weighted_sample_without_replacement([0.0, 1.0, 0.0, 2.0], 4, Rng(5))
        assert set(out[:2]) == {1, 3}
        assert set(out[2:]) == {0, 2}

    def test_all_zero_scores(self):
        leaves = [(i, ConfidenceScore(-float("inf"), 0.0)) for i in range(4)]
        assert sorted(sample_leaves("normalized_confidence", leaves, 4, Rng(2))) == [0, 1, 2, 3]

    @settings(max_examples=80, deadline=None)
    @given(
        kind=st.sampled_from(list(SamplerKind)),
        scores=st.lists(st.floats(0, 1), min_size=1, max_size=60),
        batch=st.integers(1, 80),
        seed=st.integers(0, 2**64 - 1),
    )
    def test_distinct_listed_and_deterministic(self, kind, scores, batch, seed):
        leaves = leaves_from(scores, start=10)
        a = sample_leaves(kind, leaves, batch, Rng(seed))
        b = sample_leaves(kind, leaves, batch, Rng(seed))
        assert a == b
        assert len(a) == len(set(a)) == min(batch, len(leaves))
        assert set(a) <= {i for i, _ in leaves}

    def test_large_batch_is_fast(self):
        leaves = leaves_from(np.random.default_rng(0).uniform(size=100_000))
        t0 = time.perf_counter()
        out = sample_leaves("normalized_confidence", leaves, 100_000, Rng(1))
        assert len(set(out)) == 100_000
        assert time.perf_counter() - t0 < 10


class TestTopKTokens:
    def test_order_statistics(self):
        dist = TokenDistribution([0.5, 0.3, 0.15, 0.05])
        assert top_k_tokens(dist, 2) == [(0, 0.5), (1, 0.3)]

    def test_uniform_ties(self):
        assert [t for t, _ in top_k_tokens(TokenDistribution.uniform(4), 2)] == [0, 1]

    @pytest.mark.parametrize("k", [0, 5])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            top_k_tokens(TokenDistribution.uniform(4), k)

    @given(
        probs=st.lists(st.integers(0, 5), min_size=1, max_size=12).filter(lambda xs: sum(xs) > 0),
        data=st.data(),
    )
    def test_matches_full_sort(self, probs, data):
        # integer weights make ties common
        dist = TokenDistribution(np.array(probs, dtype=float) / sum(probs))
        k = data.draw(st.integers(1, len(probs)))
        oracle = sorted(range(len(probs)), key=lambda i: (-dist[i], i))
        assert [t for t, _ in top_k_tokens(dist, k)] == oracle[:k]
        assert [t for t, _ in top_k_tokens(dist, len(probs))] == oracle
