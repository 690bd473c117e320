from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebnc.exact import bareiss_echelon, integer_scaled, rank, rref


def _rank_by_minors(m):
    """Largest k with a nonzero k x k minor, by exact cofactor determinants."""

    def det(a):
        if len(a) == 1:
            return a[0][0]
        return sum((-1) ** j * a[0][j] * det([r[:j] + r[j + 1:] for r in a[1:]]) for j in range(len(a)))

    from itertools import combinations

    rows, cols = len(m), len(m[0])
    for k in range(min(rows, cols), 0, -1):
        for rs in combinations(range(rows), k):
            for cs in combinations(range(cols), k):
                if det([[m[r][c] for c in cs] for r in rs]) != 0:
                    return k
    return 0


matrices = st.integers(1, 5).flatmap(
    lambda r: st.integers(1, 5).flatmap(
        lambda c: st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


@settings(max_examples=300, deadline=None)
@given(matrices)
def test_rank_matches_minors(m):
    assert rank(m) == _rank_by_minors(m)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_rref_spans_row_space(m):
    rows, pivots = rref(m)
    assert len(rows) == len(pivots) == rank(m)
    for k, (r, c) in enumerate(zip(rows, pivots)):
        assert r[c] == 1
        assert all(rows[i][c] == 0 for i in range(len(rows)) if i != k)
    # stacking the original rows adds nothing
    assert rank([[v * 1 for v in integer_scaled(r)] for r in rows] + m) == len(rows)


def test_bareiss_stays_integral():
    m = [[2, 4, 6], [1, 3, 5], [7, 8, 10]]
    echelon, piv = bareiss_echelon(m)
    assert all(isinstance(v, int) for r in echelon for v in r)
    assert piv == [0, 1, 2]
    # last pivot of Bareiss equals the determinant
    assert echelon[-1][-1] == round(np.linalg.det(np.array(m)))


def test_rank_deficient_and_zero():
    assert rank([[0, 0], [0, 0]]) == 0
    assert rank([[1, 2], [2, 4]]) == 1
    assert rank([]) == 0


def test_integer_scaled():
    assert integer_scaled([Fraction(1, 2), Fraction(-1, 3)]) == [3, -2]
    assert integer_scaled([Fraction(0), Fraction(-2)]) == [0, 1]
