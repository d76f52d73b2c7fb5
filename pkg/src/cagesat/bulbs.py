"""Light bulbs: indicator variables over small partial gate assignments.

A bulb lights exactly when every (gate, bit) requirement holds. The empty
bulb is the constant 1. A bulb is *protected* when lighting it already
implies a contradiction inside its own domain: a violated gate table whose
full dependency closure it covers, a forbidden clause pattern it contains,
or a demand that the pinned output be 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .circuits import Circuit, DEFINED, gate_distance
from .errors import EnumerationOverflow, UnassignedGate


@dataclass(frozen=True, order=True)
class Bulb:
    requirements: tuple[tuple[int, int], ...]   # sorted (gate id, bit), distinct gates

    @staticmethod
    def make(pairs: Iterable[tuple[int, int]]) -> "Bulb":
        pairs = tuple(sorted((int(g), int(b)) for g, b in pairs))
        gates = [g for g, _ in pairs]
        if len(set(gates)) != len(gates):
            raise ValueError("bulb requires conflicting bits on one gate")
        if any(b not in (0, 1) for _, b in pairs):
            raise ValueError("bulb bits must be 0/1")
        return Bulb(pairs)

    @property
    def gates(self) -> tuple[int, ...]:
        return tuple(g for g, _ in self.requirements)

    def bit_for(self, gid: int) -> int | None:
        for g, b in self.requirements:
            if g == gid:
                return b
        return None

    def covers(self, gid: int) -> bool:
        return self.bit_for(gid) is not None

    def diameter(self, c: Circuit) -> Fraction:
        gs = self.gates
        if len(gs) < 2:
            return Fraction(0)
        return max(gate_distance(c, a, b) for a, b in combinations(gs, 2))

    def truncate(self, removed: Iterable[int]) -> "Bulb":
        removed = set(removed)
        return Bulb(tuple((g, b) for g, b in self.requirements if g not in removed))

    def conflicts(self, other: "Bulb") -> bool:
        theirs = dict(other.requirements)
        return any(theirs.get(g, b) != b for g, b in self.requirements)

    def __repr__(self):
        body = ",".join(f"{g}={b}" for g, b in self.requirements)
        return f"Bulb({body})" if body else "Bulb(1)"


EMPTY_BULB = Bulb(())


def evaluate_bulb(b: Bulb, source) -> int:
    """1 iff every requirement matches. ``source`` is a sequence or mapping."""
    getter = source.get if isinstance(source, Mapping) else None
    for g, bit in b.requirements:
        if getter is not None:
            v = getter(g)
            if v is None:
                raise UnassignedGate(f"gate {g} unassigned")
        else:
            v = source[g]
        if (1 if v else 0) != bit:
            return 0
    return 1


def is_protected_bulb(c: Circuit, b: Bulb) -> bool:
    req = dict(b.requirements)
    if req.get(c.output_gate) == 0:
        return True
    for gid in b.gates:
        g = c.gates[gid]
        if g.kind != DEFINED:
            continue
        if all(d in req for d in g.deps):
            idx = 0
            for pos, d in enumerate(g.deps):
                idx |= req[d] << pos
            if int(g.table[idx]) != req[gid]:
                return True
    for cl in c.clauses:
        if all(req.get(gid) == bit for gid, bit in cl):
            return True
    return False


class BulbSystem:
    """Ordered, deduplicated bulb list over one circuit.

    Order is deterministic: by the sorted gate tuple, then by the bit
    pattern, so identical parameters always give the identical system.
    """

    def __init__(self, circuit: Circuit, bulbs: Iterable[Bulb],
                 k: Fraction | None = None, g_max: int | None = None):
        self.circuit = circuit
        ordered = sorted(set(bulbs), key=lambda b: (b.gates, tuple(v for _, v in b.requirements)))
        self.bulbs: tuple[Bulb, ...] = tuple(ordered)
        self.index: dict[Bulb, int] = {b: i for i, b in enumerate(self.bulbs)}
        self.k = k
        self.g_max = g_max
        self.protected: tuple[bool, ...] = tuple(is_protected_bulb(circuit, b) for b in self.bulbs)
        self._closed: bool | None = None

    def __len__(self):
        return len(self.bulbs)

    def __contains__(self, b: Bulb):
        return b in self.index

    def id_of(self, b: Bulb) -> int:
        return self.index[b]

    @property
    def empty_id(self) -> int | None:
        return self.index.get(EMPTY_BULB)

    def domains(self) -> list[tuple[int, ...]]:
        return sorted({b.gates for b in self.bulbs})

    @property
    def inclusion_closed(self) -> bool:
        """Every value pattern on every subset of every domain is present."""
        if self._closed is None:
            self._closed = all(
                Bulb.make(pat) in self.index
                for dom in self.domains()
                for r in range(len(dom))
                for keep in combinations(dom, r)
                for pat in _all_patterns(keep))
        return self._closed


class Situation:
    """An arbitrary 0/1 labeling of every bulb in a system.

    Situations need not come from any gate assignment; consistency is a
    separate check. Protected bulbs are expected to be dark.
    """

    __slots__ = ("system", "bits")

    def __init__(self, system: BulbSystem, bits):
        bits = tuple(1 if b else 0 for b in bits)
        if len(bits) != len(system):
            raise ValueError(f"situation covers {len(bits)} bulbs, system has {len(system)}")
        self.system = system
        self.bits = bits

    @staticmethod
    def from_assignment(system: BulbSystem, asg) -> "Situation":
        return Situation(system, tuple(evaluate_bulb(b, asg) for b in system.bulbs))

    def bulb_value(self, bulb_id: int) -> int:
        try:
            return self.bits[bulb_id]
        except IndexError:
            from .errors import MissingBulbValue
            raise MissingBulbValue(f"situation has no value for bulb {bulb_id}")

    def lit(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)


def _all_patterns(gates: tuple[int, ...]):
    for word in range(1 << len(gates)):
        yield tuple((g, (word >> i) & 1) for i, g in enumerate(gates))


def close_under_inclusion(bulbs: Iterable[Bulb]) -> set[Bulb]:
    out = set()
    for b in bulbs:
        gs = b.gates
        for r in range(len(gs) + 1):
            for keep in combinations(gs, r):
                for pat in _all_patterns(keep):
                    out.add(Bulb.make(pat))
    return out


def enumerate_bulbs(c: Circuit, k: Fraction, g_max: int, close: bool = True,
                    cap: int = 200_000) -> BulbSystem:
    """All bulbs with gate-set diameter <= k and at most g_max gates.

    Subsets of small sets are small, so the enumeration is inclusion-closed
    by construction; ``close`` only asserts the intent.
    """
    k = Fraction(k)
    if k <= 0 or g_max < 1:
        raise ValueError("need k > 0 and g_max >= 1")
    n = len(c.gates)
    near = {g: [h for h in range(n) if h > g and gate_distance(c, g, h) <= k] for g in range(n)}
    sets: list[tuple[int, ...]] = [()]
    level: list[tuple[int, ...]] = [(g,) for g in range(n)]
    est = 1
    while level:
        est += sum(1 << len(s) for s in level)
        if est > cap:
            raise EnumerationOverflow(
                f"bulb enumeration needs about {est} bulbs, cap is {cap}", count=est)
        sets.extend(level)
        if len(level[0]) == g_max:
            break
        nxt = []
        for s in level:
            for h in near[s[-1]]:
                if all(gate_distance(c, h, g) <= k for g in s[:-1]):
                    nxt.append(s + (h,))
        level = nxt
    bulbs = [Bulb.make(pat) for s in sets for pat in _all_patterns(s)]
    sys = BulbSystem(c, bulbs, k=k, g_max=g_max)
    if close:
        sys._closed = True
    return sys
