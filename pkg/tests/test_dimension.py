import warnings

import numpy as np
import pytest

from ebnc import structures
from ebnc.dimension import (
    build_eta_psi,
    build_kappa_system,
    check_theta_eta_open,
    dimension_blockwise,
    dimension_global,
    eta_values,
    expand_log_odds,
    kappa_values,
    phi_values,
    psi_values,
)
from ebnc.errors import CapExceeded, NonBinaryVariable
from ebnc.exact import integer_scaled, rank
from ebnc.inference import full_log_odds_table, log_odds
from ebnc.network import Variable, all_configurations
from ebnc.oracle import RankProbe, numeric_jacobian_rank

from conftest import binary_suite

Yb = Variable.binary("Y")


def _random_binary(rng, n):
    return structures.random_ebnc(rng, n, edge_prob=float(rng.uniform(0.3, 0.8)))


class TestKappaSystem:
    def test_naive_bayes_one_input(self):
        sys_ = build_kappa_system(structures.naive_bayes(Yb, structures.binary_inputs(1)))
        assert sys_.matrix.shape == (2, 3)
        assert sys_.param_names[0] == "kappa(Y=1)"
        assert list(sys_.matrix[:, 0]) == [1, 1]
        np.testing.assert_array_equal(sys_.matrix, [[1, 1, 0], [1, 0, 1]])

    def test_trivial_is_a_selection(self):
        e = structures.trivial(Variable("Y", ("a", "b", "c")), structures.binary_inputs(3))
        m = build_kappa_system(e).matrix
        assert m.shape == (2 * 8, 2 * 8)
        assert np.all(m.sum(axis=1) == 1) and np.all(m.sum(axis=0) == 1)

    def test_reproduces_log_odds(self, figure):
        rng = np.random.default_rng(0)
        for _ in range(20):
            e = structures.figure_network(rng)
            sys_ = build_kappa_system(e)
            lam = sys_.matrix @ kappa_values(e, sys_)
            np.testing.assert_allclose(lam, full_log_odds_table(e).values.ravel(), atol=1e-10)

    def test_reproduces_log_odds_non_binary(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            e = structures.random_ebnc(rng, 4, max_states=3)
            sys_ = build_kappa_system(e)
            np.testing.assert_allclose(
                sys_.matrix @ kappa_values(e, sys_), full_log_odds_table(e).values.ravel(), atol=1e-10
            )

    def test_cap(self):
        with pytest.raises(CapExceeded):
            build_kappa_system(structures.trivial(Yb, structures.binary_inputs(6)), cap=63)


class TestGlobal:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_trivial(self, n):
        assert dimension_global(structures.trivial(Yb, structures.binary_inputs(n))).dimension == 2**n

    @pytest.mark.parametrize("n", range(1, 7))
    def test_naive_bayes(self, n):
        assert dimension_global(structures.naive_bayes(Yb, structures.binary_inputs(n))).dimension == n + 1

    def test_figure(self, figure):
        assert dimension_global(figure).dimension == 15


class TestEtaPsi:
    def test_markov_chain_blocks(self):
        blocks = build_eta_psi(structures.markov_chain(Yb, structures.binary_inputs(3)))
        assert [len(b.psi_names) for b in blocks.blocks] == [1, 1, 2, 2]
        assert blocks.blocks[0].psi_names == ("psi_0",)

    def test_figure_block_ranks(self, figure):
        assert [b.rank for b in build_eta_psi(figure).blocks] == [1, 1, 2, 3, 4, 4]

    def test_naive_bayes_two_inputs(self):
        blocks = build_eta_psi(structures.naive_bayes(Yb, structures.binary_inputs(2)))
        assert [len(b.psi_names) for b in blocks.blocks] == [1, 1, 1]
        assert all(b.guards == () for b in blocks.blocks)

    def test_psi_blocks_disjoint(self, figure):
        names = [n for b in build_eta_psi(figure).blocks for n in b.psi_names]
        assert len(names) == len(set(names))

    def test_non_binary_rejected(self):
        e = structures.naive_bayes(Variable("Y", ("a", "b", "c")), structures.binary_inputs(2))
        with pytest.raises(NonBinaryVariable):
            build_eta_psi(e)
        with pytest.raises(NonBinaryVariable):
            dimension_blockwise(e)

    def test_reconstruction(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            e = _random_binary(rng, int(rng.integers(2, 7)))
            blocks = build_eta_psi(e)
            psi = psi_values(blocks, eta_values(e, blocks))
            x = [int(v) for v in rng.integers(0, 2, size=len(e.inputs))]
            assert expand_log_odds(e, blocks, psi, x) == pytest.approx(log_odds(e, x)[0], abs=1e-10)


class TestBlockwise:
    @pytest.mark.parametrize("n", range(2, 7))
    def test_markov_chain(self, n):
        assert dimension_blockwise(structures.markov_chain(Yb, structures.binary_inputs(n))).dimension == 2 * n

    @pytest.mark.parametrize("n", range(1, 7))
    def test_naive_bayes(self, n):
        assert dimension_blockwise(structures.naive_bayes(Yb, structures.binary_inputs(n))).dimension == n + 1

    def test_figure(self, figure):
        r = dimension_blockwise(figure)
        assert r.dimension == 15 and r.block_ranks == [1, 1, 2, 3, 4, 4]


class TestAgreement:
    def test_suite_methods_agree(self):
        for name, e, d in binary_suite():
            assert dimension_global(e).dimension == dimension_blockwise(e).dimension == d, name

    def test_random_binary_methods_and_numeric_rank_agree(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            e = _random_binary(rng, int(rng.integers(2, 7)))
            g, b = dimension_global(e), dimension_blockwise(e)
            assert g.dimension == b.dimension
            assert numeric_jacobian_rank(e, RankProbe(n_points=2, seed=1)) == g.dimension

    def test_non_binary_certified_matches_numeric(self):
        rng = np.random.default_rng(12)
        seen_certified = seen_bound = 0
        for _ in range(80):
            e = structures.random_ebnc(rng, int(rng.integers(2, 5)), max_states=3)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                g = dimension_global(e)
            num = numeric_jacobian_rank(e, RankProbe(n_points=2, seed=2))
            if g.certified:
                seen_certified += 1
                assert g.dimension == num
            else:
                seen_bound += 1
                assert g.dimension >= num
        assert seen_certified > 20 and seen_bound > 0

    def test_upper_bound_case_warns(self):
        # ternary class with a binary child: kappa coordinates are not free
        y = Variable("Y", ("a", "b", "c"))
        e = structures.naive_bayes(y, structures.binary_inputs(1))
        with pytest.warns(UserWarning):
            r = dimension_global(e)
        assert not r.certified


class TestBasis:
    @pytest.mark.parametrize("method", [dimension_global, dimension_blockwise])
    def test_basis_determines_lambda(self, method):
        rng = np.random.default_rng(21)
        for name, e0, d in binary_suite():
            if e0.q_y > 16:
                continue
            report = method(e0)
            assert len(report.basis) == report.dimension == d
            assert rank([integer_scaled(r) for r in report.basis]) == d
            # lambda is a function of phi, and the map phi -> lambda is injective
            assert np.linalg.matrix_rank(report.lambda_map.astype(float)) == d
            for _ in range(20):
                e = e0.with_cpts(structures.random_cpts(e0.inner.variables, e0.inner.edges, rng))
                lam = report.lambda_map @ phi_values(e, report)
                np.testing.assert_allclose(lam, full_log_odds_table(e).values.ravel(), atol=1e-9)

    def test_monotone_bound(self):
        rng = np.random.default_rng(30)
        for _ in range(40):
            e = structures.random_ebnc(rng, int(rng.integers(2, 6)), max_states=3)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                d = dimension_global(e).dimension
            free = sum(e.inner.parent_config_count(i) * (e.inner.state_count(i) - 1) for i in range(len(e.inner)))
            assert d <= min((e.r_y - 1) * e.q_y, free)

    def test_text_report(self, figure):
        text = dimension_global(figure).to_text()
        assert text.startswith("method = global\nd = 15\n")
        assert "phi_15 = " in text
        text = dimension_blockwise(figure).to_text()
        assert "block ranks = 1 + 1 + 2 + 3 + 4 + 4" in text
        assert "phi_1 = 1*eta_0" in text


class TestOpenness:
    def test_figure(self, figure):
        w = check_theta_eta_open(figure)
        assert len(w.witness) == len(build_eta_psi(figure).eta_params)
        assert w.paired  # the child terms produce complementary pairs

    @pytest.mark.parametrize(
        "e",
        [
            structures.naive_bayes(Yb, structures.binary_inputs(2)),
            structures.markov_chain(Yb, structures.binary_inputs(3)),
        ],
        ids=["naive2", "chain3"],
    )
    def test_canonical(self, e):
        w = check_theta_eta_open(e)
        assert len(w.witness) == len(build_eta_psi(e).eta_params)

    def test_witness_is_triangular(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            e = _random_binary(rng, int(rng.integers(2, 7)))
            w = check_theta_eta_open(e)
            etas = [a for a, _ in w.witness]
            assert len(etas) == len(set(etas)) == len(build_eta_psi(e).eta_params)


def test_structure_signature_guards_basis(figure):
    r = dimension_global(figure)
    assert r.extras["signature"][2] == figure.y


def test_all_configurations_order():
    np.testing.assert_array_equal(all_configurations([2, 3])[:4], [[0, 0], [0, 1], [0, 2], [1, 0]])
