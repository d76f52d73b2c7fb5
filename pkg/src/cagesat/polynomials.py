"""Lamp polynomials, local cocyclicity checking, the cocyclic subspace and
certificate search.

A lamp polynomial is a sparse multilinear polynomial over bulb indicator
variables with exact rational coefficients. It is cocyclic when its value
does not depend on the gate assignment (output pinned to 1); a cocyclic
polynomial with positive value whose positive monomials are all protected
certifies unsatisfiability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .brute import free_gates
from .bulbs import Bulb, BulbSystem, EMPTY_BULB, Situation, evaluate_bulb, is_protected_bulb
from .circuits import Circuit, neighborhood
from .errors import (EnumerationOverflow, MissingTruncatedBulb, OutputGateFlip,
                     SatisfiableCircuit, TooLarge)
from .linalg import RowEchelon, nullspace, solve_linear, span_complement
from .simplex import check_solution, find_feasible

Monomial = tuple[int, ...]          # sorted bulb ids; () is the free term


def canonical_monomial(system: BulbSystem, bulb_ids: Iterable[int]) -> Monomial | None:
    """Sorted, squarefree, empty-bulb-free; None when identically zero."""
    ids = sorted(set(bulb_ids))
    empty = system.empty_id
    ids = [i for i in ids if i != empty]
    req: dict[int, int] = {}
    for i in ids:
        for g, b in system.bulbs[i].requirements:
            if req.setdefault(g, b) != b:
                return None          # conflicting gate requirements: identically 0
    return tuple(ids)


@dataclass
class LampPolynomial:
    system: BulbSystem
    terms: dict = field(default_factory=dict)    # Monomial -> Fraction

    def __post_init__(self):
        self.terms = {m: Fraction(v) for m, v in self.terms.items() if v}

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def bulb_ids(self) -> set[int]:
        return {i for m in self.terms for i in m}

    def support_gates(self) -> set[int]:
        return {g for i in self.bulb_ids() for g in self.system.bulbs[i].gates}

    def scaled(self, q: Fraction) -> "LampPolynomial":
        return LampPolynomial(self.system, {m: q * v for m, v in self.terms.items()})

    def plus(self, other: "LampPolynomial", scale: Fraction = Fraction(1)) -> "LampPolynomial":
        terms = dict(self.terms)
        for m, v in other.terms.items():
            nv = terms.get(m, Fraction(0)) + scale * v
            if nv:
                terms[m] = nv
            else:
                terms.pop(m, None)
        return LampPolynomial(self.system, terms)

    def __repr__(self):
        n = len(self.terms)
        return f"LampPolynomial({n} terms, degree {self.degree})"

    @staticmethod
    def from_vector(system: BulbSystem, vec: Mapping) -> "LampPolynomial":
        return LampPolynomial(system, dict(vec))


def reference_assignment(c: Circuit) -> list[int]:
    asg = [0] * len(c.gates)
    asg[c.output_gate] = 1
    return asg


def evaluate_polynomial(f: LampPolynomial, source) -> Fraction:
    """Sum of coeff * product of bulb values; source is an assignment or a situation."""
    total = Fraction(0)
    if isinstance(source, Situation):
        for m, coeff in f.terms.items():
            if all(source.bulb_value(i) for i in m):
                total += coeff
        return total
    cache: dict[int, int] = {}
    for m, coeff in f.terms.items():
        lit = True
        for i in m:
            v = cache.get(i)
            if v is None:
                v = cache[i] = evaluate_bulb(f.system.bulbs[i], source)
            if not v:
                lit = False
                break
        if lit:
            total += coeff
    return total


def polynomial_value(f: LampPolynomial) -> Fraction:
    """Value at the reference assignment (all gates 0, output pinned 1)."""
    return evaluate_polynomial(f, reference_assignment(f.system.circuit))


# ---------------------------------------------------------------------------
# Difference construction (the local flip operator)

def _raw_terms(f: LampPolynomial) -> dict:
    return {frozenset(f.system.bulbs[i] for i in m): v for m, v in f.terms.items()}


def _difference_raw(terms: Mapping, u: int, nbhd: frozenset, pattern: Mapping) -> dict:
    """Change of the polynomial when gate u flips 0 -> 1 under a fixed
    punctured-neighborhood pattern, over truncated bulbs."""
    out: dict = {}
    for mono, coeff in terms.items():
        bits = {b.bit_for(u) for b in mono} - {None}
        if not bits:
            continue                         # no bulb covers u
        if len(bits) == 2:
            continue                         # conflicting cover: identically zero
        sign = 1 if 1 in bits else -1
        consistent = True
        for b in mono:
            for g, bit in b.requirements:
                if g != u and g in nbhd and pattern[g] != bit:
                    consistent = False
                    break
            if not consistent:
                break
        if not consistent:
            continue
        trunc = frozenset(tb for tb in (b.truncate(nbhd) for b in mono) if tb.requirements)
        nv = out.get(trunc, Fraction(0)) + sign * coeff
        if nv:
            out[trunc] = nv
        else:
            out.pop(trunc, None)
    return out


def difference_polynomial(f: LampPolynomial, u: int,
                          nbhd_pattern: Mapping, k: Fraction | None = None) -> LampPolynomial:
    """Public flip-difference; truncated bulbs are resolved in the system."""
    c = f.system.circuit
    if u == c.output_gate:
        raise OutputGateFlip("the pinned output gate is never flipped")
    k = f.system.k if k is None else k
    nbhd = frozenset(neighborhood(c, u, Fraction(k)))
    raw = _difference_raw(_raw_terms(f), u, nbhd, nbhd_pattern)
    terms: dict = {}
    for mono, coeff in raw.items():
        ids = []
        for b in mono:
            if b not in f.system.index:
                raise MissingTruncatedBulb(f"truncated bulb {b} not in system")
            ids.append(f.system.id_of(b))
        key = canonical_monomial(f.system, ids)
        if key is None:
            continue
        terms[key] = terms.get(key, Fraction(0)) + coeff
    return LampPolynomial(f.system, terms)


# ---------------------------------------------------------------------------
# Local cocyclicity check

@dataclass
class CheckResult:
    accepted: bool
    reason: str = ""
    witness: tuple | None = None    # (gate, pattern, depth) on rejection

    def __bool__(self):
        return self.accepted


def _raw_reference_value(c: Circuit, terms: Mapping) -> Fraction:
    ref = reference_assignment(c)
    total = Fraction(0)
    for mono, coeff in terms.items():
        if all(evaluate_bulb(b, ref) for b in mono):
            total += coeff
    return total


def _check_raw(c: Circuit, terms: Mapping, k: Fraction, depth: int) -> CheckResult:
    if not terms or all(not mono for mono in terms):
        return CheckResult(True)
    covered = sorted({g for mono in terms for b in mono for g in b.gates})
    for u in covered:
        if u == c.output_gate:
            continue
        nbhd = frozenset(neighborhood(c, u, k))
        relevant = sorted((({g for mono in terms for b in mono for g in b.gates}
                            & nbhd) - {u, c.output_gate}))
        pin_output = c.output_gate in nbhd
        for word in range(1 << len(relevant)):
            pattern = {g: (word >> i) & 1 for i, g in enumerate(relevant)}
            if pin_output:
                pattern[c.output_gate] = 1
            diff = _difference_raw(terms, u, nbhd, pattern)
            if not diff:
                continue
            sub = _check_raw(c, diff, k, depth + 1)
            if not sub:
                return sub
            if _raw_reference_value(c, diff) != 0:
                return CheckResult(False, "difference polynomial has nonzero value",
                                   (u, tuple(sorted(pattern.items())), depth))
    return CheckResult(True)


def check_cocyclic(c: Circuit, f: LampPolynomial, k: Fraction | None = None,
                   d: int | None = None) -> CheckResult:
    """Local check: every flip-difference is recursively cocyclic with value 0."""
    if d is not None and f.degree > d:
        return CheckResult(False, f"degree {f.degree} exceeds bound {d}", None)
    k = f.system.k if k is None else Fraction(k)
    if k is None:
        raise ValueError("no diameter bound k available")
    return _check_raw(c, _raw_terms(f), Fraction(k), 0)


# ---------------------------------------------------------------------------
# Vectorized exhaustive invariance (oracle-grade, small circuits only)

def _bulb_lit_arrays(c: Circuit, system, bulb_ids):
    """Per-bulb boolean lit vectors over all pinned assignments, or None when
    the enumeration would be too large."""
    free = free_gates(c)
    if len(free) > 16 or (1 << len(free)) * max(1, len(bulb_ids)) > 40_000_000:
        return None, None
    words = np.arange(1 << len(free), dtype=np.int64)
    pos = {g: i for i, g in enumerate(free)}
    lits = {}
    for bid in bulb_ids:
        mask = np.ones(len(words), dtype=bool)
        for g, bit in system.bulbs[bid].requirements:
            if g == c.output_gate:
                if bit == 0:
                    mask = np.zeros(len(words), dtype=bool)
                    break
                continue
            col = ((words >> pos[g]) & 1) == bit
            mask &= col
        lits[bid] = mask
    return lits, len(words)


def exhaustive_invariance(c: Circuit, f: LampPolynomial):
    """(invariant, common value) by direct enumeration, or (None, None) when
    the circuit is too large for the sweep. Exact integer accumulation."""
    lits, nwords = _bulb_lit_arrays(c, f.system, sorted(f.bulb_ids()))
    if lits is None:
        return None, None
    denom = 1
    for v in f.terms.values():
        denom = denom * v.denominator // math.gcd(denom, v.denominator)
    acc = [0] * nwords
    for m, coeff in f.terms.items():
        ci = int(coeff * denom)
        if not m:
            for w in range(nwords):
                acc[w] += ci
            continue
        mask = lits[m[0]].copy()
        for bid in m[1:]:
            mask &= lits[bid]
        for w in np.nonzero(mask)[0]:
            acc[w] += ci
    first = acc[0]
    if any(a != first for a in acc):
        return False, None
    return True, Fraction(first, denom)


# ---------------------------------------------------------------------------
# The cocyclic subspace of bounded degree

@dataclass
class CocyclicBasis:
    system: BulbSystem
    d: int
    monomials: list               # canonical monomials of size <= d
    elements: list                # LampPolynomial
    values: list                  # exact invariant value per element

    def __len__(self):
        return len(self.elements)

    def zero_value_subbasis(self) -> list:
        """Vectors (monomial -> Fraction) spanning the kernel of the value functional."""
        vecs = [dict(p.terms) for p in self.elements]
        pivot = next((i for i, t in enumerate(self.values) if t != 0), None)
        if pivot is None:
            return vecs
        out = []
        pv = vecs[pivot]
        tv = self.values[pivot]
        for i, v in enumerate(vecs):
            if i == pivot:
                continue
            scale = self.values[i] / tv
            merged = dict(v)
            for kk, vv in pv.items():
                nv = merged.get(kk, Fraction(0)) - scale * vv
                if nv:
                    merged[kk] = nv
                else:
                    merged.pop(kk, None)
            out.append(merged)
        return out

    def combine(self, coords: Sequence[Fraction]) -> LampPolynomial:
        f = LampPolynomial(self.system, {})
        for y, elem in zip(coords, self.elements):
            if y:
                f = f.plus(elem, Fraction(y))
        return f


def all_monomials(system: BulbSystem, d: int, cap: int = 2_000_000) -> list:
    """Canonical monomials of size <= d, deterministic order."""
    ids = range(len(system))
    out: list = [()]
    total = 1
    for size in range(1, d + 1):
        for combo in combinations(ids, size):
            m = canonical_monomial(system, combo)
            if m is not None and len(m) == size:
                out.append(m)
                total += 1
                if total > cap:
                    raise EnumerationOverflow(
                        f"more than {cap} monomials at degree {d}", count=total)
    seen = set()
    uniq = []
    for m in out:
        if m not in seen:
            seen.add(m)
            uniq.append(m)
    return uniq


def _difference_of_monomial(system: BulbSystem, mono: Monomial, u: int,
                            nbhd: frozenset, pattern: Mapping):
    """(sign, target monomial) of the flip operator on one monomial, or None."""
    bulbs = [system.bulbs[i] for i in mono]
    bits = {b.bit_for(u) for b in bulbs} - {None}
    if not bits or len(bits) == 2:
        return None
    sign = 1 if 1 in bits else -1
    for b in bulbs:
        for g, bit in b.requirements:
            if g != u and g in nbhd and pattern.get(g) != bit:
                return None
    ids = []
    for b in bulbs:
        tb = b.truncate(nbhd)
        if not tb.requirements:
            continue
        if tb not in system.index:
            raise MissingTruncatedBulb(f"truncated bulb {tb} missing: close the system")
        ids.append(system.id_of(tb))
    target = canonical_monomial(system, ids)
    if target is None:
        return None
    return sign, target


def _operator_patterns(c: Circuit, system: BulbSystem, u: int, k: Fraction,
                       monomial_gates: set[int]):
    """Distinct flip operators at gate u: patterns over co-bulbed gates in N_k(u)."""
    nbhd = frozenset(neighborhood(c, u, k))
    relevant = sorted((monomial_gates & nbhd) - {u, c.output_gate})
    pin_output = c.output_gate in nbhd
    for word in range(1 << len(relevant)):
        pattern = {g: (word >> i) & 1 for i, g in enumerate(relevant)}
        if pin_output:
            pattern[c.output_gate] = 1
        yield nbhd, pattern


def cocyclic_space(c: Circuit, bulbs: BulbSystem, d: int,
                   monomial_cap: int = 200_000) -> CocyclicBasis:
    """Exact basis of the degree-<=d cocyclic subspace by level-wise recursion.

    Each flip operator must send a candidate into the zero-value cocyclic
    subspace one degree lower; at d=1 this degenerates to the direct local
    invariance constraints.
    """
    if bulbs.k is None:
        raise ValueError("bulb system carries no diameter bound k")
    k = Fraction(bulbs.k)
    monos_prev = [()]
    basis_prev = [{(): Fraction(1)}]
    values_prev = [Fraction(1)]
    level = 0
    while level < d:
        level += 1
        monos = all_monomials(bulbs, level, cap=monomial_cap)
        basis = CocyclicBasis(bulbs, level - 1, monos_prev,
                              [LampPolynomial(bulbs, v) for v in basis_prev], values_prev)
        zero_prev = basis.zero_value_subbasis()
        wrows = span_complement(zero_prev, monos_prev)
        covering: dict[int, list[Monomial]] = {}
        gates_of_monomials: set[int] = set()
        for m in monos:
            for i in m:
                for g in bulbs.bulbs[i].gates:
                    gates_of_monomials.add(g)
                    covering.setdefault(g, [])
        for m in monos:
            touched = {g for i in m for g in bulbs.bulbs[i].gates}
            for g in touched:
                covering[g].append(m)
        rows = []
        for u in sorted(covering):
            if u == c.output_gate:
                continue
            for nbhd, pattern in _operator_patterns(c, bulbs, u, k, gates_of_monomials):
                images: dict[Monomial, list] = {}
                for m in covering[u]:
                    hit = _difference_of_monomial(bulbs, m, u, nbhd, pattern)
                    if hit:
                        sign, target = hit
                        images.setdefault(target, []).append((m, sign))
                if not images:
                    continue
                for w in wrows:
                    row: dict = {}
                    for target, sources in images.items():
                        wv = w.get(target)
                        if not wv:
                            continue
                        for m, sign in sources:
                            nv = row.get(m, Fraction(0)) + sign * wv
                            if nv:
                                row[m] = nv
                            else:
                                row.pop(m, None)
                    if row:
                        rows.append(row)
        vecs = nullspace(rows, monos)
        monos_prev = monos
        basis_prev = vecs
        values_prev = None  # computed below
        ref = reference_assignment(c)
        lit = [all(evaluate_bulb(bulbs.bulbs[i], ref) for i in m) for m in monos]
        litmap = dict(zip(monos, lit))
        values_prev = [sum((v for m, v in vec.items() if litmap[m]), Fraction(0))
                       for vec in vecs]
    elements = [LampPolynomial(bulbs, v) for v in basis_prev]
    return CocyclicBasis(bulbs, d, monos_prev, elements, values_prev)


# ---------------------------------------------------------------------------
# Protection and certificates

def monomial_is_protected(system: BulbSystem, m: Monomial, weak: bool = False) -> bool:
    """Strong rule: some bulb of the monomial is protected. Weak rule: the
    union of the bulbs' requirements already implies a contradiction."""
    if any(system.protected[i] for i in m):
        return True
    if weak and m:
        merged: dict[int, int] = {}
        for i in m:
            for g, b in system.bulbs[i].requirements:
                merged[g] = b
        return is_protected_bulb(system.circuit, Bulb.make(merged.items()))
    return False


@dataclass
class VerifyResult:
    accepted: bool
    reason: str = ""
    witness: tuple | None = None

    def __bool__(self):
        return self.accepted


def verify_certificate(c: Circuit, f: LampPolynomial, weak: bool = False,
                       k: Fraction | None = None, method: str = "auto") -> VerifyResult:
    """Cocyclic, positive value, positive monomials protected.

    ``method`` picks the invariance route: "local" is the neighborhood-flip
    check, "exhaustive" the direct sweep; "auto" sweeps when the circuit is
    small enough and falls back to the local check otherwise.
    """
    invariant = None
    if method in ("auto", "exhaustive"):
        invariant, value = exhaustive_invariance(c, f)
        if invariant is None and method == "exhaustive":
            raise TooLarge("circuit too large for exhaustive certificate verification")
    if invariant is None:
        chk = check_cocyclic(c, f, k=k)
        if not chk:
            return VerifyResult(False, "not cocyclic: " + chk.reason, chk.witness)
        value = polynomial_value(f)
    elif not invariant:
        return VerifyResult(False, "not cocyclic: value varies across assignments", None)
    if value <= 0:
        return VerifyResult(False, f"value {value} is not positive", None)
    for m, coeff in sorted(f.terms.items()):
        if coeff > 0 and not monomial_is_protected(f.system, m, weak=weak):
            return VerifyResult(False, "positive coefficient on unprotected monomial",
                                (m, coeff))
    return VerifyResult(True)


@dataclass
class CertificateSearch:
    certificate: LampPolynomial | None
    status: str          # "certificate" | "none_exists"
    via: str = ""
    basis_dim: int | None = None

    def __bool__(self):
        return self.certificate is not None


def _protected_support_solve(c: Circuit, bulbs: BulbSystem, d: int,
                             weak: bool) -> LampPolynomial | None:
    """Fast path: look for a certificate supported on protected monomials only.

    Sufficient, never necessary: failure here says nothing about existence.
    On small circuits the conditions are generated exhaustively (lit sum = 1
    at every pinned assignment); otherwise through local flip operators.
    """
    monos = [m for m in all_monomials(bulbs, d) if m and monomial_is_protected(bulbs, m, weak)]
    if not monos:
        return None
    colset = set(monos)
    bulb_ids = sorted({i for m in monos for i in m})
    lits, nwords = _bulb_lit_arrays(c, bulbs, bulb_ids)
    rows: list[dict] = []
    rhs: list[Fraction] = []
    if lits is not None:
        per_word: list[dict] = [dict() for _ in range(nwords)]
        for m in monos:
            mask = lits[m[0]].copy()
            for bid in m[1:]:
                mask &= lits[bid]
            for w in np.nonzero(mask)[0]:
                per_word[int(w)][m] = Fraction(1)
        rows = per_word
        rhs = [Fraction(1)] * nwords
    else:
        k = Fraction(bulbs.k)
        ref = reference_assignment(c)
        gates_of = {g for m in monos for i in m for g in bulbs.bulbs[i].gates}
        covering: dict[int, list[Monomial]] = {}
        for m in monos:
            for g in {g for i in m for g in bulbs.bulbs[i].gates}:
                covering.setdefault(g, []).append(m)
        for u in sorted(covering):
            if u == c.output_gate:
                continue
            for nbhd, pattern in _operator_patterns(c, bulbs, u, k, gates_of):
                # at d >= 2 span membership is relaxed to "image vanishes":
                # stronger than necessary, still sufficient for the fast path
                per_target: dict[Monomial, dict] = {}
                for m in covering[u]:
                    hit = _difference_of_monomial(bulbs, m, u, nbhd, pattern)
                    if hit:
                        sign, target = hit
                        per_target.setdefault(target, {})[m] = Fraction(sign)
                for row in per_target.values():
                    rows.append(row)
                    rhs.append(Fraction(0))
        value_row = {m: Fraction(1) for m in monos
                     if all(evaluate_bulb(bulbs.bulbs[i], ref) for i in m)}
        rows.append(value_row)
        rhs.append(Fraction(1))

    sizes = {m: -sum(len(bulbs.bulbs[i].requirements) for i in m) for m in monos}
    sol = solve_linear(rows, rhs, pivot_key=lambda m: sizes.get(m, 0))
    if sol is None:
        return None
    return LampPolynomial(bulbs, {m: v for m, v in sol.items() if m in colset})


def find_protected_certificate(c: Circuit, bulbs: BulbSystem, d: int,
                               weak: bool = False,
                               monomial_cap: int = 200_000,
                               lp_dim_cap: int | None = None) -> CertificateSearch:
    """Protected cocyclic polynomial of degree <= d, or a definitive NoneExists.

    Value is normalized to 1 (scale invariance closes the ">0" condition).
    Every returned certificate is re-verified before being reported.
    """
    fast = _protected_support_solve(c, bulbs, d, weak)
    if fast is not None and verify_certificate(c, fast, weak=weak):
        return CertificateSearch(fast, "certificate", via="protected-support")

    basis = cocyclic_space(c, bulbs, d, monomial_cap=monomial_cap)
    if lp_dim_cap is not None and len(basis) > lp_dim_cap:
        raise EnumerationOverflow(
            f"cocyclic basis dimension {len(basis)} beyond LP cap {lp_dim_cap}",
            count=len(basis))
    unprotected = [m for m in basis.monomials
                   if not monomial_is_protected(bulbs, m, weak)]
    nvars = len(basis)
    eqs = [({i: t for i, t in enumerate(basis.values) if t}, Fraction(1))]
    ineqs = []
    for m in unprotected:
        row = {i: elem.terms[m] for i, elem in enumerate(basis.elements) if m in elem.terms}
        if row:
            ineqs.append((row, Fraction(0)))
    x = find_feasible(eqs, ineqs, nvars)
    if x is None:
        return CertificateSearch(None, "none_exists", via="lp", basis_dim=nvars)
    assert check_solution(eqs, ineqs, x)
    f = basis.combine(x)
    res = verify_certificate(c, f, weak=weak)
    if not res:
        raise AssertionError(f"LP produced a bad certificate: {res.reason}")
    return CertificateSearch(f, "certificate", via="lp", basis_dim=nvars)


# ---------------------------------------------------------------------------
# Completeness construction (exponential; testing/oracle scale only)

def completeness_polynomial(c: Circuit, limit_gates: int = 20) -> LampPolynomial:
    """Sum over pinned assignments of the product of lit basic bulbs.

    Basic sets are the full dependency closures of defined gates plus the
    gate sets of explicit clauses; uncovered free gates are normalized out so
    the value is exactly 1.
    """
    from .brute import pinned_assignments, satisfiable
    free = free_gates(c)
    if len(free) > limit_gates:
        raise TooLarge(f"{len(free)} free gates exceeds the completeness limit")
    if satisfiable(c) is not None:
        raise SatisfiableCircuit("completeness construction needs an unsatisfiable circuit")
    base_sets = []
    for g in c.gates:
        if g.kind != "input":
            base_sets.append(tuple(sorted(set(g.deps) | {g.gid})))
    for cl in c.clauses:
        base_sets.append(tuple(sorted(g for g, _ in cl)))
    base_sets = sorted(set(base_sets))
    covered = {g for s in base_sets for g in s}
    z = sum(1 for g in free if g not in covered)
    norm = Fraction(1, 1 << z)

    bulb_pool: set[Bulb] = set()
    per_assignment: list[tuple[Bulb, ...]] = []
    for asg in pinned_assignments(c):
        bs = tuple(Bulb.make((g, asg[g]) for g in s) for s in base_sets)
        bulb_pool.update(bs)
        per_assignment.append(bs)
    system = BulbSystem(c, bulb_pool, k=None)
    terms: dict = {}
    for bs in per_assignment:
        m = canonical_monomial(system, [system.id_of(b) for b in bs])
        assert m is not None
        terms[m] = terms.get(m, Fraction(0)) + norm
    f = LampPolynomial(system, terms)
    # completeness systems carry no diameter bound; cocyclicity checks use
    # the largest bulb diameter so neighborhoods cover whole base sets
    diam = max((b.diameter(c) for b in system.bulbs), default=Fraction(1))
    system.k = max(diam, Fraction(1))
    return f
