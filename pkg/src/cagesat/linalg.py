"""Sparse exact-rational linear algebra: elimination, nullspaces, complements.

Vectors are dicts column -> Fraction with no stored zeros. Everything here is
exact; no floats enter the certificate trust path.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

SparseVec = dict


def vec_add(a: SparseVec, b: SparseVec, scale: Fraction = Fraction(1)) -> SparseVec:
    out = dict(a)
    for k, v in b.items():
        nv = out.get(k, Fraction(0)) + scale * v
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)
    return out


def vec_scale(a: SparseVec, s: Fraction) -> SparseVec:
    if not s:
        return {}
    return {k: s * v for k, v in a.items()}


def vec_dot(a: SparseVec, b: SparseVec) -> Fraction:
    if len(b) < len(a):
        a, b = b, a
    return sum((v * b[k] for k, v in a.items() if k in b), Fraction(0))


class RowEchelon:
    """Incremental echelon form with back-substituted pivot rows.

    Rows are reduced against the current pivots on insertion, so membership
    tests and nullspace extraction are straightforward. ``pivot_key`` biases
    pivot choice (smaller key preferred); rare columns make good pivots.
    """

    def __init__(self, pivot_key=None):
        self.pivots: dict = {}    # pivot column -> reduced row (pivot coeff 1)
        self.pivot_key = pivot_key

    def reduce(self, row: SparseVec) -> SparseVec:
        row = dict(row)
        while row:
            hit = [c for c in row if c in self.pivots]
            if not hit:
                break
            for c in hit:
                coef = row.pop(c, None)
                if coef:
                    prow = self.pivots[c]
                    for k, v in prow.items():
                        if k == c:
                            continue
                        nv = row.get(k, Fraction(0)) - coef * v
                        if nv:
                            row[k] = nv
                        else:
                            row.pop(k, None)
        return row

    def insert(self, row: SparseVec) -> bool:
        """Reduce and add; returns True when the row increased the rank."""
        row = self.reduce(row)
        if not row:
            return False
        # smallest column for determinism; the RHS sentinel only as last resort
        normal = [c for c in row if c is not RHS_COL]
        if not normal:
            piv = RHS_COL
        elif self.pivot_key is not None:
            piv = min(normal, key=lambda c: (self.pivot_key(c), c))
        else:
            piv = min(normal)
        pval = row[piv]
        row = {k: v / pval for k, v in row.items()}
        for c, prow in self.pivots.items():
            if piv in prow:
                coef = prow.pop(piv)
                for k, v in row.items():
                    if k == piv:
                        continue
                    nv = prow.get(k, Fraction(0)) - coef * v
                    if nv:
                        prow[k] = nv
                    else:
                        prow.pop(k, None)
        self.pivots[piv] = row
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def contains(self, row: SparseVec) -> bool:
        return not self.reduce(row)


def nullspace(rows: Iterable[SparseVec], columns: Sequence) -> list[SparseVec]:
    """Basis of {x : row . x = 0 for every row}, over the given column order."""
    ech = RowEchelon()
    for r in rows:
        ech.insert(r)
    basis = []
    pivcols = set(ech.pivots)
    for free in columns:
        if free in pivcols:
            continue
        vec = {free: Fraction(1)}
        for piv, prow in ech.pivots.items():
            coef = prow.get(free)
            if coef:
                vec[piv] = -coef
        basis.append(vec)
    return basis


class _RhsCol:
    __slots__ = ()

    def __repr__(self):
        return "<rhs>"


RHS_COL = _RhsCol()


def solve_linear(rows: Iterable[SparseVec], rhs: Sequence[Fraction],
                 pivot_key=None) -> SparseVec | None:
    """One particular solution of rows . x = rhs, or None when inconsistent.

    Free variables are set to zero. Rows augment the RHS as a virtual column
    pinned to 1; an echelon row reducing to that column alone reads "1 = 0".
    """
    ech = RowEchelon(pivot_key=pivot_key)
    for row, b in zip(rows, rhs):
        aug = dict(row)
        if b:
            aug[RHS_COL] = -b       # row . x - b = 0 with x_RHS pinned to 1
        ech.insert(aug)
    if RHS_COL in ech.pivots:
        return None
    out = {}
    for piv, prow in ech.pivots.items():
        # x_piv + sum(c_free x_free) + c_rhs = 0 with frees at zero
        v = -prow.get(RHS_COL, Fraction(0))
        if v:
            out[piv] = v
    return out


def span_complement(basis: list[SparseVec], columns: Sequence) -> list[SparseVec]:
    """Rows w with: v in span(basis)  <=>  w . v = 0 for all w.

    Over the rationals the orthogonal complement of the span works.
    """
    return nullspace(basis, columns)


def in_span(basis_echelon: RowEchelon, v: SparseVec) -> bool:
    return basis_echelon.contains(v)


def echelon_of(rows: Iterable[SparseVec]) -> RowEchelon:
    ech = RowEchelon()
    for r in rows:
        ech.insert(r)
    return ech
