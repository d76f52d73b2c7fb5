"""The probability-update search: sample situations, estimate how strongly
each cocyclic polynomial discriminates, convert that into per-bulb arguments,
and drive every bulb probability to 0 or 1 while staying consistent.

Floats are fine here; nothing in this module is part of the certificate trust
path. Polynomial values are compared against t(f) in scaled integers so the
<=/>= counts stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .bulbs import BulbSystem, Situation, evaluate_bulb
from .circuits import Circuit, INPUT, clause_is_violated, evaluate_circuit, gate_is_fulfilled
from .errors import EnumerationOverflow
from .polynomials import LampPolynomial, find_protected_certificate

L_FUNCTIONS: dict[str, Callable[[float], float]] = {
    # odd about 1/2, zero at 1/2, increasing, blows up at 1
    "tan": lambda x: math.tan(math.pi * (x - 0.5)),
}
M_FUNCTIONS: dict[str, Callable[[float], float]] = {
    # increasing, positive, continuous
    "one-plus": lambda x: 1.0 + x,
}


@dataclass
class SolverParams:
    d: int = 1
    a: int = 200                    # period for unfixing the head of the list
    b: int = 16                     # period for refreshing the polynomial set
    m1: int = 2                     # first-step length (no fixing)
    m: int = 8                      # second-step cap (fix on proximity)
    c_unfix: int = 30               # how long a bulb stays unfixable
    l1: float = 6.0                 # argument threshold for unfixing
    delta: float = 0.1              # fixing proximity to 0/1
    sample_count: int | None = None  # None: max(256, 8 * gate count)
    h: int = 4                      # tail collection size for the rough estimate
    lam: float = 0.05               # step size on the tan scale
    refresh_count: int = 4
    l_fn: str = "tan"
    m_fn: str = "one-plus"
    seed: int = 0
    max_steps: int = 1_000_000
    certificate_search: bool = True
    certificate_bulb_cap: int = 1200   # skip the exact phase-0 search above this
    prune_threshold: float = 0.02
    prune_patience: int = 5
    omega_cap: int = 12
    search: object = None              # SearchParams override for the engines

    def __post_init__(self):
        if min(self.a, self.b, self.m1 + 1, self.m, self.c_unfix, self.h,
               self.refresh_count) <= 0 or self.d < 1:
            raise ValueError("solver periods and counts must be positive")
        if not (0 < self.delta < 0.5):
            raise ValueError("delta must sit strictly between 0 and 1/2")
        if not (0 < self.lam <= 0.1):
            raise ValueError("lambda must be small (at most 0.1)")
        if self.l_fn not in L_FUNCTIONS or self.m_fn not in M_FUNCTIONS:
            raise ValueError("unknown l/m function name")

    def samples_for(self, circuit: Circuit) -> int:
        if self.sample_count is not None:
            return self.sample_count
        return max(256, 8 * len(circuit.gates))


@dataclass
class OmegaEntry:
    """A cocyclic polynomial staged for the solver.

    Coefficients are scaled to int64 so the <=/>= counts against t are exact;
    when the common denominator is too wild the entry degrades to float64
    with a relative tolerance around t (heuristic path only).
    """
    f: LampPolynomial
    t: Fraction
    tag: tuple | None = None               # (bulb, j) for semi-discriminated
    support: np.ndarray = field(default=None)
    mono_idx: list = field(default=None)   # per monomial: indices into support
    coeffs: np.ndarray = field(default=None)
    free_coeff: float = 0
    t_int: float = 0
    tol: float = 0.0
    last_T: list = field(default_factory=list)
    by_col: dict = field(default_factory=dict)   # support col -> [(rest idx, ci)]

    @staticmethod
    def build(f: LampPolynomial, t: Fraction, tag: tuple | None = None) -> "OmegaEntry":
        denom = 1
        for v in f.terms.values():
            denom = denom * v.denominator // math.gcd(denom, v.denominator)
        denom = denom * t.denominator // math.gcd(denom, t.denominator)
        support = sorted(f.bulb_ids())
        pos = {b: i for i, b in enumerate(support)}
        scale = max((abs(v) for v in f.terms.values()), default=Fraction(1))
        exact = denom * scale <= 1 << 50
        mono_idx, coeffs = [], []
        free = 0
        for m, v in f.terms.items():
            ci = int(v * denom) if exact else float(v)
            if not m:
                free += ci
                continue
            mono_idx.append(np.array([pos[b] for b in m], dtype=np.int64))
            coeffs.append(ci)
        dtype = np.int64 if exact else np.float64
        tol = 0.0 if exact else 1e-9 * float(scale)
        by_col: dict = {}
        for idx, ci in zip(mono_idx, np.array(coeffs, dtype=dtype)):
            for col in idx:
                rest = idx[idx != col]
                by_col.setdefault(int(col), []).append((rest, ci))
        return OmegaEntry(f, t, tag, np.array(support, dtype=np.int64), mono_idx,
                          np.array(coeffs, dtype=dtype), free,
                          int(t * denom) if exact else float(t), tol, [], by_col)


@dataclass
class ProbabilityState:
    system: BulbSystem
    p: np.ndarray                       # per-bulb probability
    fixed: dict = field(default_factory=dict)        # bulb -> bit
    order: list = field(default_factory=list)        # the fixing list P
    unfixable_since: dict = field(default_factory=dict)
    ever_unfixed: set = field(default_factory=set)
    r: int = 0

    @staticmethod
    def initial(system: BulbSystem) -> "ProbabilityState":
        p = np.full(len(system), 0.5)
        p[np.array(system.protected, dtype=bool)] = 0.0
        return ProbabilityState(system, p)

    def unprotected(self) -> np.ndarray:
        return np.nonzero(~np.array(self.system.protected, dtype=bool))[0]

    def is_fixed(self, bid: int) -> bool:
        return bid in self.fixed

    def fixable(self, bid: int) -> bool:
        return (not self.system.protected[bid] and bid not in self.fixed
                and bid not in self.unfixable_since)

    def fix(self, bid: int, bit: int):
        assert not self.system.protected[bid] and bid not in self.fixed
        self.fixed[bid] = bit
        self.p[bid] = float(bit)
        self.order.append(bid)

    def unfix(self, bid: int, margin: float = 0.05):
        assert bid in self.fixed
        bit = self.fixed[bid]
        del self.fixed[bid]
        self.order.remove(bid)
        self.unfixable_since[bid] = self.r
        self.ever_unfixed.add(bid)
        # exactly 0/1 is additively immobile on the tan scale; restart the
        # probability just inside so arguments can actually move it
        self.p[bid] = (1.0 - margin) if bit else margin

    def release_unfixables(self, age: int):
        for bid in [b for b, since in self.unfixable_since.items()
                    if self.r - since >= age]:
            del self.unfixable_since[bid]

    def audit(self):
        prot = np.array(self.system.protected, dtype=bool)
        assert not np.any(self.p[prot] > 0), "protected bulb got positive probability"
        assert sorted(self.fixed) == sorted(self.order), "fixing list out of sync"
        for bid, bit in self.fixed.items():
            assert self.p[bid] == float(bit), "fixed bulb probability drifted"
        assert np.all((self.p >= 0) & (self.p <= 1)), "probability escaped [0,1]"
        live = ~prot
        live[list(self.fixed)] = False
        # an unfixed bulb keeps its frozen 0/1 until some polynomial argues
        # about it again, so only never-unfixed bulbs are strictly inside
        live[list(self.ever_unfixed)] = False
        assert np.all((self.p[live] > 0) & (self.p[live] < 1)), \
            "unfixed unprotected probability left (0,1)"


def sample_situation(ps: ProbabilityState, override: tuple | None = None,
                     rng: np.random.Generator | None = None) -> Situation:
    rng = rng or np.random.default_rng()
    bits = rng.random(len(ps.p)) < ps.p
    if override is not None:
        s, j = override
        bits[s] = bool(j)
    return Situation(ps.system, bits.astype(np.uint8))


def _batch_values(entry: OmegaEntry, matrix: np.ndarray) -> np.ndarray:
    """Scaled polynomial values over a sampled bulb matrix."""
    vals = np.full(matrix.shape[0], entry.free_coeff, dtype=entry.coeffs.dtype)
    for idx, ci in zip(entry.mono_idx, entry.coeffs):
        vals += ci * np.all(matrix[:, idx], axis=1)
    return vals


def _counts(vals: np.ndarray, t_int, tol: float = 0.0) -> tuple[int, int]:
    return int(np.sum(vals <= t_int + tol)), int(np.sum(vals >= t_int - tol))


def _tail_estimate(vals0: np.ndarray, vals1: np.ndarray, t_int: int,
                   h: int, q: int) -> tuple[float, float]:
    """Case 3: walk outward from t on both value lines until each collected h."""
    d0 = np.sort(np.abs(vals0 - t_int))
    d1 = np.sort(np.abs(vals1 - t_int))
    hh = min(h, len(d0), len(d1))
    radius = max(d0[hh - 1], d1[hh - 1])
    a0 = int(np.sum(d0 <= radius))
    a1 = int(np.sum(d1 <= radius))
    return a0 / ((a0 + a1) * q), a1 / ((a0 + a1) * q)


def _t_from_counts(v0: int, v1: int, q: int) -> float:
    mn = min(v0, v1)
    return mn / q if mn > 0 else 1.0 / (2 * q)


def estimate_statistics(ps: ProbabilityState, entry: OmegaEntry,
                        s: int | None, params: SolverParams,
                        rng: np.random.Generator, q: int | None = None):
    """T(f) when s is None; otherwise (T0, T1) for the pinned distributions.

    Counts v_{j,i} of sampled values <=/>= t(f) drive the paper's three-case
    estimate; when each pinned line sits entirely on one side of t the tail
    walk produces a rough but sign-faithful pair.
    """
    q = q or params.samples_for(ps.system.circuit)
    support = entry.support
    probs = ps.p[support]
    matrix = rng.random((q, len(support))) < probs
    if s is None:
        vals = _batch_values(entry, matrix)
        v0, v1 = _counts(vals, entry.t_int, entry.tol)
        return _t_from_counts(v0, v1, q)
    col = int(np.searchsorted(support, s))
    assert support[col] == s, "statistics requested for a bulb outside the support"
    out = []
    batches = {}
    for j in (0, 1):
        matrix[:, col] = bool(j)
        batches[j] = _batch_values(entry, matrix)
    c0 = _counts(batches[0], entry.t_int, entry.tol)
    c1 = _counts(batches[1], entry.t_int, entry.tol)
    zeros = sum(1 for v in c0 + c1 if v == 0)
    if zeros == 0:
        return (_t_from_counts(*c0, q), _t_from_counts(*c1, q))
    if zeros == 1:
        return (_t_from_counts(*c0, q), _t_from_counts(*c1, q))
    return _tail_estimate(batches[0], batches[1], entry.t_int, params.h, q)


def argument_strength(t0: float, t1: float, params: SolverParams) -> float:
    """R(T0, T1) = l(T0/(T0+T1)) * m(1/(T0^2+T1^2)); positive pushes p down."""
    assert t0 > 0 and t1 > 0
    l = L_FUNCTIONS[params.l_fn]
    m = M_FUNCTIONS[params.m_fn]
    return l(t0 / (t0 + t1)) * m(1.0 / (t0 * t0 + t1 * t1))


_P_EPS = 1e-12


def _tan_update(p: float, step: float) -> float:
    # the tan map keeps (0,1) closed mathematically; the clamp only guards
    # against float saturation of atan at the ends
    v = math.tan(0.5 * math.pi * (2.0 * p - 1.0))
    return min(max(0.5 + math.atan(v - step) / math.pi, _P_EPS), 1.0 - _P_EPS)


def step_probabilities(ps: ProbabilityState, arguments: Mapping, params: SolverParams,
                       refresh=None, log=None) -> list:
    """One bookkeeping step: tan-scale updates, threshold unfixing, the
    periodic head-of-list unfix, polynomial refresh and unfixable release."""
    events = []
    for bid, L in arguments.items():
        if ps.system.protected[bid] or bid in ps.fixed or L == 0.0:
            continue
        ps.p[bid] = _tan_update(ps.p[bid], params.lam * L)
    for bid, bit in list(ps.fixed.items()):
        L = arguments.get(bid, 0.0)
        if (bit == 1 and L > params.l1) or (bit == 0 and L < -params.l1):
            ps.unfix(bid, margin=params.delta / 2)
            events.append(("unfix-threshold", bid))
    ps.r += 1
    if ps.r % params.a == 0 and ps.order:
        bid = ps.order[0]
        ps.unfix(bid, margin=params.delta / 2)
        events.append(("unfix-period", bid))
    if ps.r % params.b == 0 and refresh is not None:
        added = refresh()
        events.append(("refresh", added))
    ps.release_unfixables(params.c_unfix)
    if log is not None and events:
        log({"r": ps.r, "events": [(e[0], int(e[1]) if isinstance(e[1], (int, np.integer))
                                    else e[1]) for e in events]})
    return events


@dataclass
class Inconsistent:
    witness: tuple

    def __bool__(self):
        return False


def check_consistent(bs: BulbSystem, sit: Situation, c: Circuit):
    """Assignment realized by the situation, or the first witness against it.

    Domains carrying a complete pattern family must light exactly one bulb
    (the realization); realizations must be concerted on shared gates; any
    remaining bulb's bit must match the read-off gate values; and the
    assignment must fulfill every gate table, clause and the output pin.
    """
    by_domain: dict[tuple, list[int]] = {}
    for i, b in enumerate(bs.bulbs):
        by_domain.setdefault(b.gates, []).append(i)
    gate_value: dict[int, int] = {}
    realizations: dict[tuple, dict] = {}
    partial: list[int] = []
    for dom in sorted(by_domain):
        ids = by_domain[dom]
        if len(ids) == 1 << len(dom):
            lit = [i for i in ids if sit.bits[i]]
            if len(lit) != 1:
                return Inconsistent(("partition", dom, tuple(lit)))
            realizations[dom] = dict(bs.bulbs[lit[0]].requirements)
        else:
            partial.extend(ids)
    for dom, real in sorted(realizations.items()):
        if len(dom) == 1:
            gate_value[dom[0]] = real[dom[0]]
    for dom, real in sorted(realizations.items()):
        for g, bit in real.items():
            if g in gate_value and gate_value[g] != bit:
                return Inconsistent(("concert", dom, g))
            gate_value.setdefault(g, bit)
    for i in partial:
        reqs = bs.bulbs[i].requirements
        if all(g in gate_value for g, _ in reqs):
            holds = all(gate_value[g] == bit for g, bit in reqs)
            if int(sit.bits[i]) != int(holds):
                return Inconsistent(("bulb", i))
        elif sit.bits[i]:
            for g, bit in reqs:
                if g in gate_value and gate_value[g] != bit:
                    return Inconsistent(("bulb", i))
                gate_value.setdefault(g, bit)
    asg = [0] * len(c.gates)
    for g, bit in gate_value.items():
        asg[g] = bit
    if not asg[c.output_gate]:
        return Inconsistent(("output",))
    for g in c.gates:
        if not gate_is_fulfilled(c, g.gid, asg):
            return Inconsistent(("gate", g.gid))
    for i, cl in enumerate(c.clauses):
        if clause_is_violated(cl, asg):
            return Inconsistent(("clause", i))
    return asg


@dataclass
class Satisfied:
    input_bits: tuple
    assignment: list
    steps: int


@dataclass
class Certified:
    certificate: LampPolynomial
    via: str


@dataclass
class Exhausted:
    steps: int
    state: ProbabilityState
    omega_size: int


def solve(c: Circuit, bs: BulbSystem, params: SolverParams,
          trace: list | None = None):
    """Certificate search first, then the three-step fixing loop of the
    probability-update algorithm. Satisfied results are re-verified by
    forward evaluation before being returned."""
    log = trace.append if trace is not None else None
    if params.certificate_search:
        if len(bs) <= params.certificate_bulb_cap:
            try:
                found = find_protected_certificate(c, bs, params.d)
                if found:
                    return Certified(found.certificate, found.via)
            except EnumerationOverflow:
                if log:
                    log({"r": 0, "events": [("certificate-search-overflow", None)]})
        elif log:
            log({"r": 0, "events": [("certificate-search-skipped", len(bs))]})

    from .search import propose_polynomials, zero_value_basis

    rng = np.random.default_rng(params.seed)
    ps = ProbabilityState.initial(bs)
    try:
        zbasis = zero_value_basis(c, bs, params.d)
    except EnumerationOverflow:
        zbasis = None
    omega: list[OmegaEntry] = []

    def refresh() -> int:
        if zbasis is None:
            return 0
        cands = propose_polynomials(c, bs, zbasis, ps, params, rng,
                                    params.refresh_count)
        fresh = 0
        for f, t, tag in cands:
            entry = OmegaEntry.build(f, t, tag)
            if len(entry.coeffs) == 0:
                continue
            if tag is not None and tag[0] not in entry.support:
                continue              # tagged polynomial lost its bulb: useless
            omega.append(entry)
            fresh += 1
        # prune long-undiscriminating polynomials and cap the set
        keep = []
        for e in omega:
            hist = e.last_T[-params.prune_patience:]
            if (len(hist) >= params.prune_patience
                    and all(abs(t - 1.0) < params.prune_threshold for t in hist)):
                continue
            keep.append(e)
        omega[:] = keep[-params.omega_cap:]
        return fresh

    refresh()
    q = params.samples_for(c)
    unprotected = ps.unprotected()

    def arguments() -> dict:
        L: dict[int, float] = {}
        for entry in omega:
            probs = ps.p[entry.support]
            matrix = rng.random((q, len(entry.support))) < probs
            base_vals = _batch_values(entry, matrix)
            entry.last_T.append(_t_from_counts(*_counts(base_vals, entry.t_int, entry.tol), q))
            targets = entry.support if entry.tag is None else \
                [entry.tag[0]] if entry.tag[0] in entry.support else []
            for col, s in ((int(np.searchsorted(entry.support, s)), int(s))
                           for s in targets):
                if ps.system.protected[s] or col not in entry.by_col:
                    continue
                contrib_cur = np.zeros(q, dtype=entry.coeffs.dtype)
                contrib_on = np.zeros(q, dtype=entry.coeffs.dtype)
                for rest, ci in entry.by_col[col]:
                    lit_rest = np.all(matrix[:, rest], axis=1) if len(rest) else \
                        np.ones(q, dtype=bool)
                    contrib_on += ci * lit_rest
                    contrib_cur += ci * (lit_rest & matrix[:, col])
                vals1 = base_vals - contrib_cur + contrib_on
                vals0 = base_vals - contrib_cur
                c0, c1 = _counts(vals0, entry.t_int, entry.tol), _counts(vals1, entry.t_int, entry.tol)
                zeros = sum(1 for v in c0 + c1 if v == 0)
                if zeros >= 2:
                    t0, t1 = _tail_estimate(vals0, vals1, entry.t_int, params.h, q)
                else:
                    t0, t1 = _t_from_counts(*c0, q), _t_from_counts(*c1, q)
                L[s] = L.get(s, 0.0) + argument_strength(t0, t1, params)
        return L

    def iteration(allow_fix: bool) -> bool:
        args = arguments()
        fixed_bid = None
        if allow_fix:
            near = [(bid, ps.p[bid]) for bid in unprotected
                    if ps.fixable(bid)
                    and (ps.p[bid] <= params.delta or ps.p[bid] >= 1 - params.delta)]
            if near:
                fixed_bid = min(b for b, _ in near)
                bit = 1 if ps.p[fixed_bid] >= 0.5 else 0
                ps.fix(fixed_bid, bit)
                if log:
                    log({"r": ps.r, "events": [("fix", int(fixed_bid), bit)]})
        step_probabilities(ps, args, params, refresh=refresh, log=log)
        return fixed_bid is not None

    while ps.r < params.max_steps:
        for _ in range(params.m1):
            if ps.r >= params.max_steps:
                break
            iteration(allow_fix=False)
        fixed_any = False
        for _ in range(params.m):
            if ps.r >= params.max_steps:
                break
            if iteration(allow_fix=True):
                fixed_any = True
                break
        if not fixed_any and ps.r < params.max_steps:
            candidates = [bid for bid in unprotected if ps.fixable(bid)]
            if candidates:
                bid = max(candidates, key=lambda b: (abs(ps.p[b] - 0.5), -b))
                bit = 1 if ps.p[bid] >= 0.5 else 0
                ps.fix(bid, bit)
                if log:
                    log({"r": ps.r, "events": [("fix-farthest", int(bid), bit)]})
        ps.audit()
        if all(bid in ps.fixed for bid in unprotected):
            bits = np.zeros(len(bs), dtype=np.uint8)
            for bid, bit in ps.fixed.items():
                bits[bid] = bit
            res = check_consistent(bs, Situation(bs, bits), c)
            if not isinstance(res, Inconsistent):
                inputs = tuple(res[g] for g in c.input_gates)
                out, _ = evaluate_circuit(c, inputs)
                assert out == 1, "consistent situation failed forward evaluation"
                return Satisfied(inputs, res, ps.r)
            if log:
                log({"r": ps.r, "events": [("inconsistent", res.witness[0])]})
            # interior bookkeeping may disagree while the input word itself is
            # already a solution: harvest it off the singleton realizations
            word = _input_word(bs, c, ps)
            if word is not None:
                out, asg = evaluate_circuit(c, word)
                if out == 1:
                    return Satisfied(tuple(word), asg, ps.r)
    return Exhausted(ps.r, ps, len(omega))


def _input_word(bs: BulbSystem, c: Circuit, ps: ProbabilityState):
    from .bulbs import Bulb
    word = []
    for g in c.input_gates:
        one = bs.index.get(Bulb.make(((g, 1),)))
        if one is None:
            return None
        word.append(int(ps.p[one] >= 0.5))
    return word
