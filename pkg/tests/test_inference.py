import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebnc import structures
from ebnc.errors import CapExceeded, NetworkError, PartialConfiguration
from ebnc.inference import (
    Ebnc,
    classify,
    conditional_distribution,
    full_log_odds_table,
    log_odds,
    softmax,
)
from ebnc.network import BayesianNetwork, Variable, all_configurations, ordering_y_late, uniform_cpts
from ebnc.oracle import exhaustive_posterior


def _x_assignment(e, x):
    return dict(zip(e.inputs, (int(v) for v in x)))


class TestLogOdds:
    def test_uniform_is_zero(self, figure):
        e = Ebnc(figure.inner.with_cpts(uniform_cpts(figure.inner.variables, figure.inner.edges)), 0)
        for x in all_configurations(e.input_state_counts):
            np.testing.assert_array_equal(log_odds(e, x), [0.0])

    def test_naive_bayes_one_input(self, nb1):
        # p(y2|x2) = 0.6*0.8 / (0.6*0.8 + 0.4*0.3) = 0.8, so the odds are 4
        assert log_odds(nb1, [1])[0] == pytest.approx(math.log(4), abs=1e-12)

    def test_partial_x_rejected(self, figure):
        with pytest.raises(PartialConfiguration):
            log_odds(figure, [0, 1])

    def test_random_against_enumeration(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            e = structures.random_ebnc(rng, int(rng.integers(2, 7)), max_states=3)
            x = [int(rng.integers(r)) for r in e.input_state_counts]
            expected = exhaustive_posterior(e.inner, e.y, _x_assignment(e, x))
            np.testing.assert_allclose(softmax(log_odds(e, x)), expected, rtol=0, atol=1e-10)

    def test_ordering_invariance(self):
        rng = np.random.default_rng(5)
        checked = 0
        for _ in range(60):
            e = structures.random_ebnc(rng, 6, edge_prob=0.35)
            net = e.inner
            order, n_h = ordering_y_late(net, e.y)
            head, tail = order[:n_h], order[n_h + 1:]
            alt = None
            for _ in range(30):
                cand = list(rng.permutation(head)) + [e.y] + list(rng.permutation(tail))
                cand = [int(v) for v in cand]
                if cand != order and net.is_topological(cand):
                    alt = cand
                    break
            if alt is None:
                continue
            checked += 1
            for x in all_configurations(e.input_state_counts):
                np.testing.assert_allclose(log_odds(e, x, order), log_odds(e, x, alt), rtol=0, atol=1e-12)
        assert checked > 10

    def test_invalid_ordering_rejected(self, figure):
        with pytest.raises(NetworkError):
            log_odds(figure, [0] * 5, ordering=[0, 1, 2, 3, 4, 5])


class TestSoftmax:
    def test_symmetric(self):
        np.testing.assert_allclose(softmax([0.0, 0.0]), [1 / 3] * 3, atol=1e-15)

    def test_two_states(self):
        np.testing.assert_allclose(softmax([math.log(2)]), [1 / 3, 2 / 3], atol=1e-15)

    def test_no_overflow(self):
        p = softmax([1000.0, -1000.0])
        assert np.all(np.isfinite(p)) and p[1] == pytest.approx(1.0)

    @settings(max_examples=200)
    @given(st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=6))
    def test_round_trip(self, w):
        p = np.array(w) / np.sum(w)
        np.testing.assert_allclose(softmax(np.log(p[1:] / p[0])), p, atol=1e-12)

    @settings(max_examples=100)
    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=5))
    def test_positive_normalized(self, lam):
        p = softmax(lam)
        assert np.all(p > 0) and p.sum() == pytest.approx(1.0, abs=1e-12)
        assert p[0] == pytest.approx(1 / (1 + np.exp(lam).sum()), rel=1e-12)


class TestConditional:
    def test_uniform(self, Y):
        e = structures.naive_bayes(Variable("Y", ("a", "b", "c")), structures.binary_inputs(2))
        np.testing.assert_allclose(conditional_distribution(e, [1, 0]), [1 / 3] * 3, atol=1e-15)

    def test_naive_bayes_one_input(self, nb1):
        np.testing.assert_allclose(conditional_distribution(nb1, [1]), [0.2, 0.8], atol=1e-12)

    def test_trivial_matches_cpt_row(self, Y):
        e = structures.trivial(Y, structures.binary_inputs(3), np.random.default_rng(2))
        for row, x in enumerate(all_configurations(e.input_state_counts)):
            np.testing.assert_allclose(conditional_distribution(e, x), e.inner.cpts[0][row], atol=1e-15)


class TestClassify:
    def test_tie_goes_to_state_zero(self, Y):
        assert classify(structures.naive_bayes(Y, structures.binary_inputs(2)), [0, 1]) == 0

    def test_naive_bayes_one_input(self, nb1):
        assert classify(nb1, [1]) == 1

    def test_matches_enumeration_argmax(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            e = structures.random_ebnc(rng, int(rng.integers(2, 7)), max_states=3)
            x = [int(rng.integers(r)) for r in e.input_state_counts]
            assert classify(e, x) == int(np.argmax(exhaustive_posterior(e.inner, e.y, _x_assignment(e, x))))


class TestTable:
    def test_row_count(self, Y):
        t = full_log_odds_table(structures.naive_bayes(Y, structures.binary_inputs(2)))
        assert t.values.shape == (4, 1)

    def test_uniform_zero(self, Y):
        t = full_log_odds_table(structures.naive_bayes(Y, structures.binary_inputs(3)))
        assert not t.values.any()

    def test_rows_match_single_calls(self, figure):
        t = full_log_odds_table(figure)
        for x in all_configurations(figure.input_state_counts):
            np.testing.assert_array_equal(t.row(x), log_odds(figure, x))

    def test_cap(self, Y):
        with pytest.raises(CapExceeded):
            full_log_odds_table(structures.naive_bayes(Y, structures.binary_inputs(5)), cap=16)


def test_inputs_must_cover_the_inner_network():
    v = [Variable.binary("Y"), Variable.binary("A"), Variable.binary("B")]
    net = BayesianNetwork(v, [], uniform_cpts(v, []))
    with pytest.raises(NetworkError):
        Ebnc(net, 0, (1,))
    e = Ebnc(net, 0, (2, 1))
    assert e.input_names == ["B", "A"]
