import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebnc import structures
from ebnc.errors import InvalidAlpha, TooLarge
from ebnc.inference import full_log_odds_table
from ebnc.network import BayesianNetwork, Variable, uniform_cpts
from ebnc.oracle import (
    RankProbe,
    exact_trivial_marginal,
    exhaustive_posterior,
    numeric_jacobian_rank,
    oracle_log_odds_table,
    posterior_table,
)


class TestPosterior:
    def test_uniform(self, Y):
        e = structures.naive_bayes(Y, structures.binary_inputs(3))
        np.testing.assert_allclose(exhaustive_posterior(e.inner, 0, {1: 1, 2: 0, 3: 1}), [0.5, 0.5], atol=1e-15)

    def test_naive_bayes_one_input(self, nb1):
        np.testing.assert_allclose(exhaustive_posterior(nb1.inner, 0, {1: 1}), [0.2, 0.8], atol=1e-12)

    def test_empty_evidence_is_the_marginal(self, nb1):
        np.testing.assert_allclose(exhaustive_posterior(nb1.inner, 0, {}), [0.4, 0.6], atol=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        e = structures.random_ebnc(rng, 5, max_states=3)
        np.testing.assert_allclose(posterior_table(e).sum(axis=1), 1.0, atol=1e-12)

    def test_table_matches_inference(self, figure):
        np.testing.assert_allclose(oracle_log_odds_table(figure), full_log_odds_table(figure).values, atol=1e-10)

    def test_too_large(self):
        v = [Variable.binary(f"V{i}") for i in range(21)]
        net = BayesianNetwork(v, [], uniform_cpts(v, []))
        with pytest.raises(TooLarge):
            exhaustive_posterior(net, 0, {})


class TestNumericRank:
    def test_trivial_two(self, Y):
        assert numeric_jacobian_rank(structures.trivial(Y, structures.binary_inputs(2))) == 4

    def test_naive_bayes_three(self, Y):
        assert numeric_jacobian_rank(structures.naive_bayes(Y, structures.binary_inputs(3))) == 4

    def test_figure(self, figure):
        probe = RankProbe()
        assert numeric_jacobian_rank(figure, probe) == 15
        assert probe.per_point_ranks == [15] * 5

    def test_seeded(self, figure):
        a, b = RankProbe(seed=3), RankProbe(seed=3)
        numeric_jacobian_rank(figure, a)
        numeric_jacobian_rank(figure, b)
        for x, y in zip(a.singular_values, b.singular_values):
            np.testing.assert_array_equal(x, y)


class TestExactMarginal:
    def test_no_data(self):
        assert exact_trivial_marginal([[0, 0]], 1.0) == 0.0

    def test_single_case(self):
        assert exact_trivial_marginal([[1, 0]], 1.0) == pytest.approx(math.log(1 / 2), abs=1e-12)

    def test_two_one(self):
        # 1/2 * 2/3 * 1/4
        assert exact_trivial_marginal([[2, 1]], 1.0) == pytest.approx(math.log(1 / 12), abs=1e-12)

    def test_sums_over_parent_rows(self):
        assert exact_trivial_marginal([[2, 1], [1, 0]], 1.0) == pytest.approx(math.log(1 / 24), abs=1e-12)

    @settings(max_examples=100)
    @given(st.lists(st.integers(0, 30), min_size=2, max_size=5), st.floats(0.1, 5.0), st.randoms())
    def test_permutation_invariant(self, counts, alpha, rnd):
        perm = list(counts)
        rnd.shuffle(perm)
        assert exact_trivial_marginal([counts], alpha) == pytest.approx(exact_trivial_marginal([perm], alpha), abs=1e-9)

    @pytest.mark.parametrize("alpha", [0.0, -1.0, math.inf, math.nan])
    def test_invalid_alpha(self, alpha):
        with pytest.raises(InvalidAlpha):
            exact_trivial_marginal([[1, 2]], alpha)
