import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from treesearch import ConfidenceScore, ScorerKind, apply_evaluator, repetition_penalty_hook, score
from treesearch.scoring import EvaluatorContractError, count_repetition_violations

ALL_KINDS = list(ScorerKind)


def lps(*probs):
    return [math.log(p) for p in probs]


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_empty_is_neutral(kind):
    s = score(kind, [])
    assert s.linear == 1.0 and s.log_value == 0.0


def test_geometric_identity():
    assert score("geometric_mean", lps(1.0, 1.0)).linear == 1.0


def test_geometric_mean_value():
    probs = [0.9, 0.4, 0.6]
    direct = (0.9 * 0.4 * 0.6) ** (1 / 3)
    assert direct == pytest.approx(0.6, rel=1e-12)
    assert score(ScorerKind.GEOMETRIC_MEAN, lps(*probs)).linear == pytest.approx(direct, rel=1e-12)


def test_sum_logprob_value():
    s = score(ScorerKind.SUM_LOGPROB, lps(0.5, 0.5))
    assert s.log_value == pytest.approx(math.log(0.25), abs=1e-15)
    assert s.linear == pytest.approx(0.25, abs=1e-15)


def test_arithmetic_mean_value():
    assert score(ScorerKind.ARITHMETIC_MEAN, lps(0.2, 0.8)).linear == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("bad", [[0.1], [float("nan")], [-1.0, 1e-3]])
def test_rejects_positive_or_nan(bad):
    with pytest.raises(ValueError):
        score(ScorerKind.GEOMETRIC_MEAN, bad)


def test_zero_probability_is_floored():
    s = score(ScorerKind.SUM_LOGPROB, [-math.inf])
    assert s.log_value == pytest.approx(math.log(1e-12))


probs_lists = st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=32)


@given(probs_lists)
def test_score_invariants(probs):
    for kind in ALL_KINDS:
        s = score(kind, lps(*probs))
        assert 0.0 <= s.linear <= 1.0
        assert s.log_value <= 0.0
        assert s.linear == pytest.approx(math.exp(s.log_value), rel=1e-12)


@given(probs_lists, st.randoms(use_true_random=False))
def test_permutation_invariance(probs, rnd):
    shuffled = probs[:]
    rnd.shuffle(shuffled)
    for kind in ALL_KINDS:
        a = score(kind, lps(*probs)).log_value
        b = score(kind, lps(*shuffled)).log_value
        assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


def test_geometric_and_sum_rank_alike_at_equal_length():
    rng = np.random.default_rng(7)
    for length in (1, 3, 8):
        seqs = rng.uniform(1e-4, 1.0, size=(50, length))
        geo = [score(ScorerKind.GEOMETRIC_MEAN, np.log(s)).log_value for s in seqs]
        tot = [score(ScorerKind.SUM_LOGPROB, np.log(s)).log_value for s in seqs]
        assert np.array_equal(np.argsort(geo, kind="stable"), np.argsort(tot, kind="stable"))


@given(probs_lists)
def test_sum_logprob_never_increases_along_a_path(probs):
    values = [score(ScorerKind.SUM_LOGPROB, lps(*probs[:i])).log_value for i in range(len(probs) + 1)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_geometric_mean_can_increase_along_a_path():
    parent = score(ScorerKind.GEOMETRIC_MEAN, lps(0.1))
    child = score(ScorerKind.GEOMETRIC_MEAN, lps(0.1, 0.9))
    assert child.linear > parent.linear


def test_log_domain_matches_direct_product():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        probs = rng.uniform(1e-6, 1.0, size=rng.integers(1, 33))
        direct = np.prod(probs) ** (1 / len(probs))
        got = score(ScorerKind.GEOMETRIC_MEAN, np.log(probs)).linear
        assert abs(got - direct) <= 1e-9 * direct


class TestEvaluator:
    base = ConfidenceScore.from_linear(0.6)

    def test_identity_hook(self):
        assert apply_evaluator(self.base, lambda toks: 1.0, [1, 2]) == self.base

    def test_half_hook(self):
        out = apply_evaluator(self.base, lambda toks: 0.5, [1])
        assert out.linear == pytest.approx(0.3)
        assert out.log_value == pytest.approx(math.log(0.3))

    def test_zero_hook(self):
        assert apply_evaluator(self.base, lambda toks: 0.0, [1]).linear == 0.0

    @pytest.mark.parametrize("value", [1.5, -0.1, float("nan")])
    def test_out_of_range(self, value):
        with pytest.raises(EvaluatorContractError):
            apply_evaluator(self.base, lambda toks: value, [1])

    def test_repetition_hook_orders_runs_below_alternation(self):
        hook = repetition_penalty_hook(max_run=4)
        run = "a a a a a a".split()
        alternating = "a b a b a b".split()
        base = ConfidenceScore.from_linear(0.8)
        assert apply_evaluator(base, hook, run).linear < apply_evaluator(base, hook, alternating).linear


class TestRepetitionHook:
    def test_clean_sequence(self):
        assert repetition_penalty_hook(4)("a b c d".split()) == 1.0

    def test_run_of_five(self):
        # one token beyond the allowed run of 4
        assert repetition_penalty_hook(4)("a a a a a".split()) == 0.5

    def test_degenerate_bang_run(self):
        tokens = list("[[[[[[!!!!!!!!!!!!!!!!!!!!!!!!!!")
        assert repetition_penalty_hook(4)(tokens) < 1.0

    def test_repeated_ngram(self):
        tokens = "x y z x y z x y z".split()
        assert count_repetition_violations(tokens, max_run=4, ngram_window=3) == 1
        assert repetition_penalty_hook(4, 3)(tokens) == 0.5

    def test_two_copies_allowed(self):
        assert repetition_penalty_hook(4, 3)("x y z x y z".split()) == 1.0

    def test_requires_max_run_of_two(self):
        with pytest.raises(ValueError):
            repetition_penalty_hook(1)

    @given(st.lists(st.integers(0, 3), max_size=40), st.integers(2, 6), st.integers(1, 4))
    def test_output_in_unit_interval(self, tokens, max_run, window):
        value = repetition_penalty_hook(max_run, window)(tokens)
        assert 0.0 < value <= 1.0
