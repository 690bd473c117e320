"""Exact integer linear algebra: fraction-free (Bareiss) elimination and RREF."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def bareiss_echelon(matrix: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[int]]:
    """Row echelon form by fraction-free elimination.

    Every intermediate entry stays an integer: after eliminating with pivot
    ``p`` the update ``(p*a - b*c) // prev`` divides exactly.

    Returns the nonzero echelon rows and their pivot columns.
    """
    rows = [[int(v) for v in r] for r in matrix]
    if not rows:
        return [], []
    n_cols = len(rows[0])
    n_rows = len(rows)
    prev = 1
    r = 0
    pivots: list[int] = []
    for c in range(n_cols):
        if r == n_rows:
            break
        piv = next((i for i in range(r, n_rows) if rows[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][c]
        pr = rows[r]
        for i in range(r + 1, n_rows):
            ri = rows[i]
            b = ri[c]
            if b == 0:
                # still scale so the exact-division invariant holds
                for j in range(c + 1, n_cols):
                    if ri[j]:
                        ri[j] = (p * ri[j]) // prev
            else:
                for j in range(c + 1, n_cols):
                    ri[j] = (p * ri[j] - b * pr[j]) // prev
                ri[c] = 0
        prev = p
        pivots.append(c)
        r += 1
    return rows[:r], pivots


def rank(matrix: Sequence[Sequence[int]]) -> int:
    return len(bareiss_echelon(matrix)[1])


def rref(matrix: Sequence[Sequence[int]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form of the row space (nonzero rows only)."""
    echelon, pivots = bareiss_echelon(matrix)
    rows = [[Fraction(v) for v in r] for r in echelon]
    for k in range(len(rows) - 1, -1, -1):
        c = pivots[k]
        inv = 1 / rows[k][c]
        rows[k] = [v * inv for v in rows[k]]
        for i in range(k):
            f = rows[i][c]
            if f:
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[k])]
    return rows, pivots


def integer_scaled(row: Sequence[Fraction]) -> list[int]:
    """Smallest integer multiple of a rational row with a positive leading entry."""
    from math import gcd, lcm

    den = 1
    for v in row:
        den = lcm(den, Fraction(v).denominator)
    ints = [int(Fraction(v) * den) for v in row]
    g = 0
    for v in ints:
        g = gcd(g, v)
    if g == 0:
        return ints
    ints = [v // g for v in ints]
    lead = next(v for v in ints if v)
    return ints if lead > 0 else [-v for v in ints]
