"""Search for strongly discriminated cocyclic polynomials: the half-space
walk and the quadratic (variance-minimizing) method over extended bulbs,
plus semi-discriminated and small-support variants.

Engines explore coordinate space in floats but emit exact rational
combinations of the cocyclic basis, so every candidate is cocyclic by
construction; re-verification happens where it is cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .bulbs import Bulb, BulbSystem
from .circuits import Circuit
from .errors import AllZeroFunctionals, EnumerationOverflow, NoHyperplane
from .linalg import nullspace, solve_linear
from .polynomials import (CocyclicBasis, LampPolynomial, Monomial, cocyclic_space,
                          exhaustive_invariance)


@dataclass
class SearchParams:
    q_poly: int = 128             # sampled situations defining half-spaces
    lambda1: float = 0.1          # walk step multiplier
    walk_steps: int = 40
    restarts: int = 4
    start_scale: float = 1.0
    theta: Fraction | None = None  # principal-axis level; None: var(h)/100
    Q: int = 2                    # small-support subset size
    subset_cap: int = 20000
    engine_dim_cap: int = 40
    seed: int = 0

    def __post_init__(self):
        if min(self.q_poly, self.walk_steps, self.restarts, self.Q) <= 0:
            raise ValueError("search counts must be positive")
        if self.Q > 4:
            raise ValueError("small-support subsets are capped at Q <= 4")
        if self.theta is not None and self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.lambda1 <= 0 or self.start_scale <= 0:
            raise ValueError("walk parameters must be positive")


@dataclass
class ExtendedBulb:
    """A monomial repackaged as one indicator over the union of its bulbs'
    requirements; lights iff every constituent lights."""
    monomial: Monomial
    bulb: Bulb

    @staticmethod
    def of(system: BulbSystem, m: Monomial) -> "ExtendedBulb":
        merged: dict[int, int] = {}
        for i in m:
            for g, b in system.bulbs[i].requirements:
                assert merged.setdefault(g, b) == b, "conflicting monomial escaped pruning"
        return ExtendedBulb(m, Bulb.make(merged.items()))

    def probability(self, p: Sequence[Fraction], system: BulbSystem) -> Fraction:
        out = Fraction(1)
        for i in self.monomial:
            out *= Fraction(p[i])
        return out


def extend_monomial_bulbs(system: BulbSystem, monomials: Iterable[Monomial]):
    """Extended-bulb universe plus the degree-1 reinterpretation map."""
    universe = [ExtendedBulb.of(system, m) for m in monomials if m]
    return universe, {eb.monomial: eb for eb in universe}


@dataclass
class EngineBasis:
    """The subspace engines walk in: zero value and zero free term."""
    system: BulbSystem
    full: CocyclicBasis
    vectors: list                   # dicts monomial -> Fraction
    monomials: list                 # union of nonempty monomials in vectors

    def dim(self) -> int:
        return len(self.vectors)

    def combine(self, coords) -> LampPolynomial:
        terms: dict = {}
        for y, vec in zip(coords, self.vectors):
            if not y:
                continue
            for m, v in vec.items():
                nv = terms.get(m, Fraction(0)) + Fraction(y) * v
                if nv:
                    terms[m] = nv
                else:
                    terms.pop(m, None)
        return LampPolynomial(self.system, terms)


def _drop_coordinate(vectors: list, coord) -> list:
    pivot = next((i for i, v in enumerate(vectors) if v.get(coord)), None)
    if pivot is None:
        return [dict(v) for v in vectors]
    out = []
    pv = vectors[pivot]
    pval = pv[coord]
    for i, v in enumerate(vectors):
        if i == pivot:
            continue
        scale = v.get(coord, Fraction(0)) / pval
        merged = dict(v)
        for kk, vv in pv.items():
            nv = merged.get(kk, Fraction(0)) - scale * vv
            if nv:
                merged[kk] = nv
            else:
                merged.pop(kk, None)
        assert coord not in merged or merged[coord] == 0
        merged.pop(coord, None)
        out.append(merged)
    return out


def _normalize_vector(vec: dict) -> dict:
    """Scale to coprime integer coefficients (keeps downstream rationals small)."""
    if not vec:
        return vec
    denom = 1
    for v in vec.values():
        denom = denom * v.denominator // math.gcd(denom, v.denominator)
    nums = [int(v * denom) for v in vec.values()]
    g = 0
    for nv in nums:
        g = math.gcd(g, abs(nv))
    scale = Fraction(denom, g or 1)
    return {m: v * scale for m, v in vec.items()}


def zero_value_basis(c: Circuit, bs: BulbSystem, d: int, **space_kwargs) -> EngineBasis:
    """Restrict the cocyclic space to t(f) = 0 and zero free coefficient."""
    full = cocyclic_space(c, bs, d, **space_kwargs)
    vectors = full.zero_value_subbasis()
    vectors = [_normalize_vector(v) for v in _drop_coordinate(vectors, ())]
    monomials = sorted({m for v in vectors for m in v})
    return EngineBasis(bs, full, vectors, monomials)


# ---------------------------------------------------------------------------
# Quadratic optimization engine

@dataclass
class QuadraticModel:
    basis: EngineBasis
    probs: list                     # Fraction per extended bulb (basis monomial)
    mu_coeffs: list                 # expectation functional per basis element
    var_matrix: list                # exact Gram matrix of the variance form

    @staticmethod
    def build(basis: EngineBasis, p: Sequence) -> "QuadraticModel":
        system = basis.system
        monos = basis.monomials
        P = []
        for m in monos:
            prob = Fraction(1)
            for i in m:
                prob *= Fraction(p[i])
            P.append(prob)
        w = [pr * (1 - pr) for pr in P]
        dim = len(basis.vectors)
        mu = []
        for vec in basis.vectors:
            mu.append(sum((v * P[monos.index(m)] for m, v in vec.items()), Fraction(0)))
        V = [[Fraction(0)] * dim for _ in range(dim)]
        midx = {m: i for i, m in enumerate(monos)}
        cols = [{midx[m]: v for m, v in vec.items()} for vec in basis.vectors]
        for mi, wm in enumerate(w):
            if not wm:
                continue
            touch = [(i, col[mi]) for i, col in enumerate(cols) if mi in col]
            for a, (i, ci) in enumerate(touch):
                for j, cj in touch[a:]:
                    V[i][j] += wm * ci * cj
                    if i != j:
                        V[j][i] = V[i][j]
        return QuadraticModel(basis, P, mu, V)

    def mu(self, coords) -> Fraction:
        return sum((Fraction(y) * q for y, q in zip(coords, self.mu_coeffs)), Fraction(0))

    def var(self, coords) -> Fraction:
        dim = len(self.mu_coeffs)
        out = Fraction(0)
        for i in range(dim):
            yi = Fraction(coords[i])
            if not yi:
                continue
            for j in range(dim):
                yj = Fraction(coords[j])
                if yj:
                    out += yi * self.var_matrix[i][j] * yj
        return out


@dataclass
class QuadraticResult:
    minimizer: list                 # exact coordinates of h
    alpha: Fraction                 # KKT multiplier: 2 V h = alpha mu
    axis_points: list               # extra candidates around h
    degenerate: bool


def quadratic_candidates(model: QuadraticModel, params: SearchParams) -> QuadraticResult:
    """Exact minimizer of the variance form on the mu = -1 hyperplane, plus
    the principal-axis points where the recentred form reaches theta."""
    dim = len(model.mu_coeffs)
    if all(q == 0 for q in model.mu_coeffs):
        raise NoHyperplane("expectation functional vanishes on the subspace")
    ALPHA = dim
    rows, rhs = [], []
    for i in range(dim):
        row = {j: 2 * model.var_matrix[i][j] for j in range(dim)
               if model.var_matrix[i][j]}
        if model.mu_coeffs[i]:
            row[ALPHA] = -model.mu_coeffs[i]
        rows.append(row)
        rhs.append(Fraction(0))
    rows.append({i: q for i, q in enumerate(model.mu_coeffs) if q})
    rhs.append(Fraction(-1))
    sol = solve_linear(rows, rhs)
    degenerate = False
    if sol is None:
        # flat form along the hyperplane: fall back to the closest point to 0
        norm = sum(q * q for q in model.mu_coeffs)
        sol = {i: -q / norm for i, q in enumerate(model.mu_coeffs)}
        sol[ALPHA] = Fraction(0)
        degenerate = True
    h = [sol.get(i, Fraction(0)) for i in range(dim)]
    alpha = sol.get(ALPHA, Fraction(0))
    if not degenerate:
        for i in range(dim):
            lhs = sum(2 * model.var_matrix[i][j] * h[j] for j in range(dim))
            assert lhs == alpha * model.mu_coeffs[i], "stationarity failed exactly"

    axis_points: list[list[Fraction]] = []
    var_h = model.var(h)
    theta = params.theta if params.theta is not None else \
        (var_h / 100 if var_h > 0 else None)
    if theta is not None and dim > 1:
        # principal axes only steer extra candidates, so the reduction to the
        # hyperplane and the eigenproblem run in floats; the emitted points
        # are rationalized and hence still exactly cocyclic
        pivot = next(i for i, q in enumerate(model.mu_coeffs) if q)
        qf = np.array([float(v) for v in model.mu_coeffs])
        Vf = np.array([[float(v) for v in row] for row in model.var_matrix])
        null = np.zeros((dim - 1, dim))
        row = 0
        for i in range(dim):
            if i == pivot:
                continue
            null[row, i] = 1.0
            null[row, pivot] = -qf[i] / qf[pivot]
            row += 1
        A = null @ Vf @ null.T
        evals, evecs = np.linalg.eigh(A)
        hf = np.array([float(v) for v in h])
        for lam, vec in zip(evals, evecs.T):
            if lam <= 1e-12:
                continue
            r = math.sqrt(float(theta) / lam)
            direction = null.T @ vec
            for sign in (1, -1):
                point = hf + sign * r * direction
                axis_points.append([Fraction(float(x)).limit_denominator(1 << 20)
                                    for x in point])
    return QuadraticResult(h, alpha, axis_points, degenerate)


def quadratic_applicable(model: QuadraticModel, lo: float = 0.05, hi: float = 0.95,
                         need: int = 8) -> bool:
    """The normal-approximation premise: enough extended bulbs in mid-range."""
    alive = sum(1 for pr in model.probs if lo < float(pr) < hi)
    return alive >= need


# ---------------------------------------------------------------------------
# Half-space engine

def halfspace_search(basis: EngineBasis, ps, params: SearchParams,
                     rng: np.random.Generator):
    """Jumps along summed unit normals of unpierced half-spaces; returns the
    visited point (either orientation) piercing the most half-spaces."""
    dim = basis.dim()
    if dim == 0:
        raise AllZeroFunctionals("empty search space")
    nbulbs = len(basis.system)
    monos = basis.monomials
    C = np.zeros((len(monos), dim))
    for j, vec in enumerate(basis.vectors):
        for m, v in vec.items():
            C[monos.index(m), j] = float(v)
    draws = rng.random((params.q_poly, nbulbs)) < np.asarray(ps.p)
    lit = np.ones((params.q_poly, len(monos)), dtype=bool)
    for mi, m in enumerate(monos):
        for bid in m:
            lit[:, mi] &= draws[:, bid]
    H = lit @ C
    norms = np.linalg.norm(H, axis=1)
    H = H[norms > 1e-12]
    if len(H) == 0:
        raise AllZeroFunctionals("every sampled situation induces the zero functional")
    normals = H / np.linalg.norm(H, axis=1, keepdims=True)

    visited = []
    starts = []
    for _ in range(params.restarts):
        x = rng.normal(scale=params.start_scale, size=dim)
        starts.append(x.copy())
        visited.append(x.copy())
        for _ in range(params.walk_steps):
            unpierced = (H @ x) <= 0
            if not unpierced.any():
                break
            x = x + params.lambda1 * normals[unpierced].sum(axis=0)
            visited.append(x.copy())

    def pierced(v):
        return int(np.sum(H @ v > 1e-12))

    best, best_count = None, -1
    for v in visited:
        for w in (v, -v):
            cnt = pierced(w)
            if cnt > best_count:
                best, best_count = w, cnt
    assert best_count >= max(pierced(x) for x in starts), "walk lost its start points"
    coords = [Fraction(float(x)).limit_denominator(1 << 20) for x in best]
    return coords, best_count


# ---------------------------------------------------------------------------
# Wrappers

def search_semidiscriminated(ps, bulb: int, j: int, engine, *args, **kwargs):
    """Clone the probabilities with p_bulb pinned to j, run the engine, and
    tag the candidates so the solver only uses the bulb's own argument."""
    import copy
    clone = copy.copy(ps)
    clone.p = ps.p.copy()
    clone.p[bulb] = float(j)
    out = engine(clone, *args, **kwargs)
    return [(cand, (bulb, j)) for cand in (out if isinstance(out, list) else [out])]


def small_support_search(basis: CocyclicBasis, p: Sequence, params: SearchParams):
    """Candidates supported on at most Q monomials of mid-range probability.

    Intersects the cocyclic space with each coordinate subspace exactly.
    """
    system = basis.system
    eligible = []
    for m in basis.monomials:
        if not m:
            continue
        prob = Fraction(1)
        for i in m:
            prob *= Fraction(p[i])
        if 0 < prob < 1:
            eligible.append(m)
    count = sum(math.comb(len(eligible), r) for r in range(1, params.Q + 1))
    if count > params.subset_cap:
        raise EnumerationOverflow(
            f"{count} small-support subsets exceed the cap {params.subset_cap}",
            count=count)
    support_of = [set(e.terms) for e in basis.elements]
    out = []
    seen = set()
    for r in range(1, params.Q + 1):
        for S in combinations(eligible, r):
            Sset = set(S)
            rows = []
            alive = [i for i, sup in enumerate(support_of) if sup & Sset]
            if not alive:
                continue
            outside = sorted({m for i in alive for m in support_of[i]} - Sset)
            for m in outside:
                row = {i: basis.elements[i].terms[m] for i in alive
                       if m in basis.elements[i].terms}
                if row:
                    rows.append(row)
            for vec in nullspace(rows, alive):
                coords = [Fraction(0)] * len(basis.elements)
                for i, v in vec.items():
                    coords[i] = v
                f = basis.combine(coords)
                if not f.terms:
                    continue
                key = tuple(sorted(f.terms.items()))
                if key in seen:
                    continue
                seen.add(key)
                t = sum((Fraction(y) * tv for y, tv in zip(coords, basis.values)),
                        Fraction(0))
                out.append((f, t))
    return out


def propose_polynomials(c: Circuit, bs: BulbSystem, basis: EngineBasis,
                        ps, params_or_solver, rng: np.random.Generator,
                        count: int):
    """Engine orchestration for the solver: quadratic when its premise holds,
    half-space otherwise; an occasional semi-discriminated run keeps variety.
    Returns (polynomial, t, tag) triples."""
    sp = getattr(params_or_solver, "search", None) or SearchParams()
    if basis.dim() == 0:
        return []
    sub = basis
    if basis.dim() > sp.engine_dim_cap:
        take = sorted(rng.choice(basis.dim(), size=sp.engine_dim_cap, replace=False))
        sub = EngineBasis(basis.system, basis.full,
                          [basis.vectors[i] for i in take],
                          sorted({m for i in take for m in basis.vectors[i]}))
    p_exact = [Fraction(float(v)).limit_denominator(256) for v in ps.p]
    out = []
    model = QuadraticModel.build(sub, p_exact)
    if quadratic_applicable(model):
        try:
            res = quadratic_candidates(model, sp)
            for coords in [res.minimizer] + res.axis_points:
                # the exact point matters for its direction, not its scale:
                # shrink coordinate denominators so coefficients stay small
                coords = [Fraction(float(y)).limit_denominator(1 << 16) for y in coords]
                f = sub.combine(coords)
                if f.terms:
                    out.append((f, Fraction(0), None))
                if len(out) >= count:
                    break
        except NoHyperplane:
            pass
    while len(out) < count:
        try:
            coords, _ = halfspace_search(sub, ps, sp, rng)
        except AllZeroFunctionals:
            break
        f = sub.combine(coords)
        if f.terms:
            out.append((f, Fraction(0), None))
        else:
            break
    # cheap re-verification where the circuit is small enough to sweep
    verified = []
    for f, t, tag in out[:count]:
        inv, val = exhaustive_invariance(c, f)
        if inv is False:
            raise AssertionError("engine emitted a non-cocyclic candidate")
        if inv and val != t:
            raise AssertionError("engine candidate value disagrees with its t")
        verified.append((f, t, tag))
    return verified
