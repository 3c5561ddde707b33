"""Exact feasibility of ``A f = b, f >= 0`` over the rationals.

A dense phase-one simplex on ``Fraction`` entries with Bland's rule, so it
terminates and answers with zero tolerance. Only meant for the small path
systems of the brute-force decomposition oracle.
"""

from __future__ import annotations

from collections.abc import Sequence
from fractions import Fraction


def feasible_point(a: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """A nonnegative solution of ``a @ f = b``, or ``None`` if none exists."""
    m = len(a)
    n = len(a[0]) if m else 0
    if m == 0:
        return [Fraction(0)] * n
    rows: list[list[Fraction]] = []
    for i in range(m):
        row = [Fraction(v) for v in a[i]]
        rhs = Fraction(b[i])
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        # columns: n structural, m artificial, then rhs
        rows.append(row + [Fraction(int(j == i)) for j in range(m)] + [rhs])
    basis = [n + i for i in range(m)]
    width = n + m
    # reduced cost of minimizing the sum of artificials
    cost = [Fraction(0)] * (width + 1)
    for row in rows:
        for j in range(n):
            cost[j] -= row[j]
        cost[width] -= row[width]
    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i, row in enumerate(rows):
            if row[enter] > 0:
                ratio = row[width] / row[enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:  # unbounded direction cannot occur in phase one
            break
        _pivot(rows, cost, leave, enter)
        basis[leave] = enter
    if cost[width] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rows[i][width]
    return x


def _pivot(rows: list[list[Fraction]], cost: list[Fraction], r: int, c: int) -> None:
    piv = rows[r][c]
    pr = [v / piv for v in rows[r]]
    rows[r] = pr
    nz = [j for j, v in enumerate(pr) if v]
    for i, row in enumerate(rows):
        if i != r and row[c]:
            f = row[c]
            for j in nz:
                row[j] -= f * pr[j]
    if cost[c]:
        f = cost[c]
        for j in nz:
            cost[j] -= f * pr[j]
