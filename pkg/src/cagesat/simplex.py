"""Textbook exact-rational simplex, used only as a feasibility oracle.

Free variables are split into positive parts, inequalities get slacks, and a
phase-1 objective over artificials decides feasibility. Bland's rule keeps
the walk finite. Everything is Fractions; fine at desk scale, not beyond.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


def find_feasible(equalities, inequalities, num_vars: int,
                  max_pivots: int = 200_000) -> list[Fraction] | None:
    """Find x in Q^num_vars with a.x = b for equalities and a.x <= b for inequalities.

    Rows are (sparse dict col->Fraction, rhs). Returns None when infeasible.
    """
    nslack = len(inequalities)
    width = 2 * num_vars + nslack
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []

    def densify(sparse, slack_idx=None):
        row = [ZERO] * width
        for j, v in sparse.items():
            row[2 * j] = Fraction(v)
            row[2 * j + 1] = -Fraction(v)
        if slack_idx is not None:
            row[2 * num_vars + slack_idx] = ONE
        return row

    for sparse, b in equalities:
        rows.append(densify(sparse))
        rhs.append(Fraction(b))
    for i, (sparse, b) in enumerate(inequalities):
        rows.append(densify(sparse, i))
        rhs.append(Fraction(b))
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]

    m = len(rows)
    total = width + m
    for i, row in enumerate(rows):
        row.extend(ONE if j == i else ZERO for j in range(m))
    basis = [width + i for i in range(m)]

    # phase-1 reduced costs for minimizing the artificial sum (basis = I)
    z = [ZERO] * total
    for j in range(width):
        z[j] = -sum(rows[i][j] for i in range(m))
    obj = sum(rhs, ZERO)

    pivots = 0
    while True:
        enter = next((j for j in range(total) if z[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                ratio = rhs[i] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            raise RuntimeError("phase-1 objective unbounded: construction bug")
        piv = rows[leave][enter]
        rows[leave] = [v / piv for v in rows[leave]]
        rhs[leave] /= piv
        for i in range(m):
            if i != leave and rows[i][enter]:
                f = rows[i][enter]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[leave])]
                rhs[i] -= f * rhs[leave]
        if z[enter]:
            f = z[enter]
            z = [a - f * b for a, b in zip(z, rows[leave])]
            obj -= f * rhs[leave]
        basis[leave] = enter
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("simplex pivot cap exceeded")

    if obj != 0:
        return None
    x = [ZERO] * num_vars
    for i, bv in enumerate(basis):
        if bv < 2 * num_vars and rhs[i]:
            j, sign = divmod(bv, 2)
            x[j] += rhs[i] if sign == 0 else -rhs[i]
    return x


def check_solution(equalities, inequalities, x: Sequence[Fraction]) -> bool:
    for sparse, b in equalities:
        if sum((Fraction(v) * x[j] for j, v in sparse.items()), ZERO) != Fraction(b):
            return False
    for sparse, b in inequalities:
        if sum((Fraction(v) * x[j] for j, v in sparse.items()), ZERO) > Fraction(b):
            return False
    return True
