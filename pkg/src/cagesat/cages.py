"""Cages and trees of cages: weighted bulb families whose lit sum is invariant.

An ordinary cage is the degree-1 proof object; a tree of cages conditions
child nodes on the constant gates accumulated from the parent's positive
bulbs. Accepted trees reduce to protected cocyclic polynomials of value 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .bulbs import Bulb, BulbSystem, is_protected_bulb
from .circuits import (Circuit, clause_is_violated, gate_is_fulfilled,
                       set_neighborhood)
from .errors import ProofIntegrityError, TooLarge, ZeroInvariant
from .polynomials import LampPolynomial, canonical_monomial


@dataclass
class Cage:
    entries: dict                       # Bulb -> Fraction weight
    declared_value: Fraction
    constant_gates: dict = field(default_factory=dict)   # gate -> pinned bit

    def __post_init__(self):
        self.entries = {b: Fraction(w) for b, w in self.entries.items() if w}
        self.declared_value = Fraction(self.declared_value)
        self.constant_gates = {int(g): int(v) for g, v in self.constant_gates.items()}

    def bulbs(self) -> list[Bulb]:
        return sorted(self.entries)

    def max_diameter(self, c: Circuit) -> Fraction:
        return max((b.diameter(c) for b in self.entries), default=Fraction(0))


@dataclass
class CageTree:
    nodes: list                          # Cage; index 0 is the root
    children: dict                       # (node index, Bulb) -> node index
    terminal: set                        # (node index, Bulb)

    def child_of(self, node: int, bulb: Bulb):
        return self.children.get((node, bulb))


@dataclass
class ViolationTrace:
    path: list                           # (node index, Bulb) chain, root downward
    violated: tuple                      # ("gate", gid) or ("clause", index)


@dataclass
class CageCheck:
    accepted: bool
    reason: str = ""
    detail: tuple | None = None
    warnings: list = field(default_factory=list)

    def __bool__(self):
        return self.accepted


def _live_entries(cage: Cage):
    """Entries whose bulbs do not conflict with the node's constant gates."""
    out = {}
    for b, w in cage.entries.items():
        ok = all(cage.constant_gates.get(g, bit) == bit for g, bit in b.requirements)
        if ok:
            out[b] = w
    return out


def _find_local_witness(c: Circuit, assigned: Mapping) -> tuple | None:
    """Violated gate (with its whole dependency closure assigned) or clause."""
    for gid in assigned:
        g = c.gates[gid]
        if g.kind == "input" or any(d not in assigned for d in g.deps):
            continue
        idx = 0
        for pos, d in enumerate(g.deps):
            idx |= assigned[d] << pos
        if int(g.table[idx]) != assigned[gid]:
            return ("gate", gid)
    for i, cl in enumerate(c.clauses):
        if all(assigned.get(g) == bit for g, bit in cl):
            return ("clause", i)
    return None


def _security_ok(c: Circuit, bulb: Bulb, constants: Mapping,
                 radius: Fraction, pattern_cap: int = 1 << 22) -> tuple | None:
    """None when secured; else the unsecured lighting pattern."""
    if is_protected_bulb(c, bulb):
        return None
    base = dict(constants)
    base.update(dict(bulb.requirements))
    if base.get(c.output_gate, 1) != 1:
        return None                       # can never light with the output pinned
    base[c.output_gate] = 1
    nbhd = set_neighborhood(c, bulb.gates, radius) if bulb.gates else ()
    frees = [g for g in nbhd if g not in base]
    if 1 << len(frees) > pattern_cap:
        raise TooLarge(f"security neighborhood of {bulb} has {len(frees)} free gates")
    for word in range(1 << len(frees)):
        assigned = dict(base)
        for i, g in enumerate(frees):
            assigned[g] = (word >> i) & 1
        if _find_local_witness(c, assigned) is None:
            return tuple(sorted(assigned.items()))
    return None


def verify_cage(c: Circuit, cage: Cage, mode: str = "local",
                security_radius: Fraction | None = None,
                require_positive: bool = True,
                check_security: bool = True) -> CageCheck:
    """Invariance, declared value, positivity and security of one cage.

    Local mode checks flip-differences per gate over the patterns of the
    co-bulbed gates; exhaustive mode sums over every assignment directly and
    is the oracle for small circuits.
    """
    if cage.constant_gates.get(c.output_gate, 1) != 1:
        return CageCheck(False, "constant gates contradict the pinned output")
    live = _live_entries(cage)
    if security_radius is None:
        security_radius = 2 * max(cage.max_diameter(c), Fraction(1))

    if mode == "exhaustive":
        check = _verify_exhaustive(c, cage, live)
        if not check:
            return check
    else:
        covering: dict[int, list[Bulb]] = {}
        for b in live:
            for g in b.gates:
                covering.setdefault(g, []).append(b)
        for u in sorted(covering):
            if u == c.output_gate or u in cage.constant_gates:
                continue
            relevant = sorted({g for b in covering[u] for g in b.gates}
                              - {u, c.output_gate} - set(cage.constant_gates))
            pin_out = any(b.covers(c.output_gate) for b in covering[u])
            for word in range(1 << len(relevant)):
                pattern = {g: (word >> i) & 1 for i, g in enumerate(relevant)}
                pattern.update(cage.constant_gates)
                if pin_out or c.output_gate in pattern:
                    pattern[c.output_gate] = 1
                total = Fraction(0)
                for b in covering[u]:
                    if all(pattern.get(g, bit) == bit
                           for g, bit in b.requirements if g != u):
                        total += live[b] if b.bit_for(u) == 1 else -live[b]
                if total != 0:
                    return CageCheck(False, "lit sum changes when a gate flips",
                                     ("NonInvariant", u, tuple(sorted(pattern.items()))))
        ref = {g.gid: 0 for g in c.gates}
        ref.update(cage.constant_gates)
        ref[c.output_gate] = 1
        value = sum((w for b, w in live.items()
                     if all(ref[g] == bit for g, bit in b.requirements)), Fraction(0))
        if value != cage.declared_value:
            return CageCheck(False, f"invariant sum is {value}, declared {cage.declared_value}",
                             ("WrongValue", value))

    if require_positive and cage.declared_value <= 0:
        return CageCheck(False, "declared value is not positive", ("NonPositive",))
    if not check_security:
        return CageCheck(True)
    for b, w in sorted(live.items()):
        if w > 0:
            if mode == "exhaustive":
                bad = _exhaustive_unsecured(c, cage, b)
            else:
                bad = _security_ok(c, b, cage.constant_gates, security_radius)
            if bad is not None:
                return CageCheck(False, "positive bulb conceals no contradiction",
                                 ("Unsecured", b, bad))
    return CageCheck(True)


def _assignments_extending(c: Circuit, constants: Mapping, limit: int = 1 << 20):
    free = [g.gid for g in c.gates if g.gid != c.output_gate and g.gid not in constants]
    if 1 << len(free) > limit:
        raise TooLarge("exhaustive cage verification limited to 20 free gates")
    asg = [0] * len(c.gates)
    for g, v in constants.items():
        asg[g] = v
    asg[c.output_gate] = 1
    for word in range(1 << len(free)):
        for i, g in enumerate(free):
            asg[g] = (word >> i) & 1
        yield asg


def _verify_exhaustive(c: Circuit, cage: Cage, live: Mapping) -> CageCheck:
    for asg in _assignments_extending(c, cage.constant_gates):
        v = sum((w for b, w in live.items()
                 if all(asg[g] == bit for g, bit in b.requirements)), Fraction(0))
        if v != cage.declared_value:
            return CageCheck(False, f"sum {v} != declared {cage.declared_value} somewhere",
                             ("WrongValue", v))
    return CageCheck(True)


def _exhaustive_unsecured(c: Circuit, cage: Cage, bulb: Bulb) -> tuple | None:
    for asg in _assignments_extending(c, cage.constant_gates):
        if all(asg[g] == bit for g, bit in bulb.requirements):
            assigned = {g.gid: asg[g.gid] for g in c.gates}
            if _find_local_witness(c, assigned) is None:
                return tuple(sorted(assigned.items()))
    return None


# ---------------------------------------------------------------------------
# Trees of cages

def verify_cage_tree(c: Circuit, tree: CageTree, d_metric: Fraction | None = None,
                     mode: str = "local") -> CageCheck:
    """Each node is a cage over its constant-gate domain; every positive bulb
    is terminal with an in-domain contradiction or owns exactly one child."""
    warnings: list[str] = []
    if not tree.nodes:
        return CageCheck(False, "empty tree")
    if tree.nodes[0].constant_gates:
        return CageCheck(False, "root node must have no constant gates")
    for (ni, bulb), child in tree.children.items():
        parent = tree.nodes[ni]
        if bulb not in parent.entries:
            return CageCheck(False, "child edge references a bulb absent from its node",
                             ("Structure", ni, bulb))
        want = dict(parent.constant_gates)
        ok = all(want.setdefault(g, bit) == bit for g, bit in bulb.requirements)
        if not ok:
            return CageCheck(False, "child constant gates conflict with its bulb",
                             ("Structure", ni, bulb))
        if tree.nodes[child].constant_gates != want:
            return CageCheck(False, "child constants differ from parent + bulb",
                             ("Structure", ni, bulb, child))
    for ni, node in enumerate(tree.nodes):
        live = _live_entries(node)
        for b, w in live.items():
            if w <= 0:
                continue
            is_term = (ni, b) in tree.terminal
            has_child = (ni, b) in tree.children
            if is_term and not is_protected_bulb(c, b):
                return CageCheck(False, "terminal bulb has no in-domain contradiction",
                                 ("Unsecured", ni, b))
            if not is_term and not has_child:
                return CageCheck(False, "positive bulb neither terminal nor parent",
                                 ("DanglingPositiveBulb", ni, b))
        check = _verify_node(c, node, mode)
        if not check:
            check.detail = ("node", ni) + (check.detail or ())
            return check
        if node.declared_value <= 0:
            return CageCheck(False, f"node {ni} has non-positive invariant",
                             ("NonPositive", ni))
        if d_metric is not None:
            bound = Fraction(d_metric) / 3
            for b in node.entries:
                if b.diameter(c) > bound:
                    return CageCheck(False, "bulb diameter exceeds d/3",
                                     ("DiameterExceeded", ni, b))
        else:
            big = [b for b in node.entries if b.diameter(c) > 1]
            if big:
                warnings.append(f"node {ni}: {len(big)} bulbs wider than 1 (no d configured)")
    return CageCheck(True, warnings=warnings)


def _verify_node(c: Circuit, node: Cage, mode: str) -> CageCheck:
    """Invariance and declared value only; security is the tree's business."""
    if mode == "exhaustive":
        return _verify_exhaustive(c, node, _live_entries(node))
    return verify_cage(c, node, mode="local", require_positive=False,
                       check_security=False)


def extract_violation(c: Circuit, proof, asg) -> ViolationTrace:
    """Follow lit positive bulbs down to a terminal contradiction.

    Total for accepted proofs; anything else is a verifier bug and raises.
    """
    if not asg[c.output_gate]:
        raise ValueError("assignments handed to proofs must pin the output to 1")
    if isinstance(proof, Cage):
        tree = CageTree([proof], {}, {(0, b) for b in proof.entries})
    else:
        tree = proof
    node_idx = 0
    path = []
    seen = set()
    while True:
        node = tree.nodes[node_idx]
        live = _live_entries(node)
        lit = [b for b, w in sorted(live.items()) if w > 0
               and all(asg[g] == bit for g, bit in b.requirements)]
        if not lit:
            raise ProofIntegrityError(
                f"NoLitPositive at node {node_idx}: accepted proof failed on an assignment")
        bulb = lit[0]
        path.append((node_idx, bulb))
        if (node_idx, bulb) in tree.terminal or (node_idx, bulb) not in tree.children:
            assigned = {g.gid: asg[g.gid] for g in c.gates}
            dom = dict(bulb.requirements)
            witness = _find_local_witness(c, dom)
            if witness is None:
                witness = _find_local_witness(c, assigned)
            if witness is None:
                raise ProofIntegrityError("terminal bulb lit but nothing is violated")
            return ViolationTrace(path, witness)
        node_idx = tree.children[(node_idx, bulb)]
        if node_idx in seen:
            raise ProofIntegrityError("cycle in cage tree")
        seen.add(node_idx)


def tree_to_polynomial(tree: CageTree, c: Circuit) -> LampPolynomial:
    """Normalize each node and emit one monomial per maximal chain.

    Chains follow positive bulbs into child cages and stop at non-positive or
    terminal bulbs; the coefficient is the product of normalized weights, and
    the resulting polynomial is cocyclic with value exactly 1.
    """
    for node in tree.nodes:
        if node.declared_value == 0:
            raise ZeroInvariant("cage node has invariant sum 0")
    bulb_pool = {b for node in tree.nodes for b in node.entries}
    diam = max((b.diameter(c) for b in bulb_pool), default=Fraction(0))
    system = BulbSystem(c, bulb_pool, k=max(diam, Fraction(1)))
    terms: dict = {}

    def walk(node_idx: int, acc_ids: tuple, acc_coeff: Fraction):
        node = tree.nodes[node_idx]
        for b, w in sorted(node.entries.items()):
            wn = w / node.declared_value
            if wn == 0:
                continue
            ids = acc_ids + (system.id_of(b),)
            if wn > 0 and (node_idx, b) in tree.children:
                walk(tree.children[(node_idx, b)], ids, acc_coeff * wn)
            else:
                m = canonical_monomial(system, ids)
                if m is None:
                    continue
                nv = terms.get(m, Fraction(0)) + acc_coeff * wn
                if nv:
                    terms[m] = nv
                else:
                    terms.pop(m, None)

    walk(0, (), Fraction(1))
    return LampPolynomial(system, terms)
