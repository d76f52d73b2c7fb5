"""Layered gate circuits with a metric, forbidden-pattern clauses and a pinned output.

A circuit is the shared substrate of the whole package: proofs quantify over
*all* total 0/1 gate assignments whose output gate is 1, while evaluation
computes the one assignment that is consistent with every gate table.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

INPUT = "input"
DEFINED = "defined"

Clause = frozenset  # frozenset of (gate_id, bit) pairs


@dataclass(frozen=True)
class Gate:
    """One gate: an input or a truth-table function of earlier gates.

    ``position`` is (x, y, b): plane coordinates plus a bit index used by the
    metric tie-break so distinct gates always sit at positive distance.
    """

    gid: int
    kind: str
    position: tuple[Fraction, Fraction, int]
    deps: tuple[int, ...] = ()
    table: Sequence[int] | None = None

    def __post_init__(self):
        if self.kind == INPUT:
            if self.deps or self.table is not None:
                raise ValueError(f"input gate {self.gid} cannot have deps or a table")
        else:
            if self.table is None or len(self.table) != 1 << len(self.deps):
                raise ValueError(f"gate {self.gid}: table length must be 2^|deps|")


class Circuit:
    """Indexed gate list, pinned output gate and explicit forbidden patterns."""

    def __init__(self, gates: Sequence[Gate], output_gate: int,
                 clauses: Iterable[Iterable[tuple[int, int]]] = (),
                 bit_depth: int = 1, width: int | None = None, height: int | None = None):
        self.gates = tuple(gates)
        for i, g in enumerate(self.gates):
            if g.gid != i:
                raise ValueError("gate ids must be contiguous and match list order")
        self.output_gate = output_gate
        self.clauses = tuple(frozenset(cl) for cl in clauses)
        self.bit_depth = max(1, bit_depth)
        self.width = width
        self.height = height
        self._check()

    def _check(self):
        order = {}
        for g in self.gates:
            order[g.gid] = (g.position[1], g.gid)
        for g in self.gates:
            for d in g.deps:
                if d < 0 or d >= len(self.gates):
                    raise ValueError(f"gate {g.gid}: dep {d} out of range")
                if order[d] >= order[g.gid]:
                    raise ValueError(f"gate {g.gid}: dep {d} does not precede it in y-then-id order")
        for cl in self.clauses:
            seen = {}
            for gid, bit in cl:
                if bit not in (0, 1):
                    raise ValueError("clause bits must be 0/1")
                if seen.setdefault(gid, bit) != bit:
                    raise ValueError("clause requires conflicting bits on one gate")

    def __len__(self):
        return len(self.gates)

    @property
    def input_gates(self) -> tuple[int, ...]:
        return tuple(g.gid for g in self.gates if g.kind == INPUT)

    def epsilon(self) -> Fraction:
        return Fraction(1, 2 * self.bit_depth)

    def digest(self) -> str:
        """Content hash of the canonical gate serialization; binds certificates."""
        h = hashlib.sha256()
        for g in self.gates:
            x, y, b = g.position
            table = "" if g.table is None else ",".join(str(int(v)) for v in g.table)
            h.update(f"{g.gid}|{g.kind}|{x}|{y}|{b}|{g.deps}|{table}\n".encode())
        h.update(f"out={self.output_gate};bits={self.bit_depth}\n".encode())
        for cl in sorted(tuple(sorted(c)) for c in self.clauses):
            h.update(f"clause {cl}\n".encode())
        return h.hexdigest()


def gate_distance(c: Circuit, g1: int, g2: int) -> Fraction:
    """Chebyshev distance on (x, y) plus a sub-unit bit-index tie-break."""
    if g1 == g2:
        return Fraction(0)
    x1, y1, b1 = c.gates[g1].position
    x2, y2, b2 = c.gates[g2].position
    planar = max(abs(Fraction(x1) - Fraction(x2)), abs(Fraction(y1) - Fraction(y2)))
    return planar + c.epsilon() * abs(b1 - b2)


def gate_is_fulfilled(c: Circuit, gid: int, asg: Sequence[int]) -> bool:
    g = c.gates[gid]
    if g.kind == INPUT:
        return True
    idx = 0
    for pos, d in enumerate(g.deps):
        idx |= (1 if asg[d] else 0) << pos
    return int(g.table[idx]) == (1 if asg[gid] else 0)


def clause_is_violated(cl: Clause, asg: Sequence[int]) -> bool:
    return all((1 if asg[gid] else 0) == bit for gid, bit in cl)


def violated_gates(c: Circuit, asg: Sequence[int]) -> list[int]:
    return [g.gid for g in c.gates if not gate_is_fulfilled(c, g.gid, asg)]


def violated_clauses(c: Circuit, asg: Sequence[int]) -> list[int]:
    return [i for i, cl in enumerate(c.clauses) if clause_is_violated(cl, asg)]


def assignment_is_valid(c: Circuit, asg: Sequence[int]) -> bool:
    """True when every gate table holds, no clause fires and the output is 1."""
    if not asg[c.output_gate]:
        return False
    return not violated_gates(c, asg) and not violated_clauses(c, asg)


def evaluate_circuit(c: Circuit, input_bits: Sequence[int]) -> tuple[int, list[int]]:
    """Forward-evaluate: the unique assignment matching every gate table.

    The output value is reported as computed, not pinned.
    """
    inputs = c.input_gates
    if len(input_bits) != len(inputs):
        raise ValueError(f"expected {len(inputs)} input bits, got {len(input_bits)}")
    asg = [0] * len(c.gates)
    feed = dict(zip(inputs, input_bits))
    for g in sorted(c.gates, key=lambda g: (g.position[1], g.gid)):
        if g.kind == INPUT:
            asg[g.gid] = 1 if feed[g.gid] else 0
        else:
            idx = 0
            for pos, d in enumerate(g.deps):
                idx |= asg[d] << pos
            asg[g.gid] = int(g.table[idx])
    return asg[c.output_gate], asg


def neighborhood(c: Circuit, gid: int, radius: Fraction) -> tuple[int, ...]:
    """Gates within metric distance ``radius`` of ``gid`` (inclusive)."""
    return tuple(g.gid for g in c.gates if gate_distance(c, gid, g.gid) <= radius)


def set_neighborhood(c: Circuit, gids: Iterable[int], radius: Fraction) -> tuple[int, ...]:
    gids = tuple(gids)
    out = []
    for g in c.gates:
        if any(gate_distance(c, g.gid, h) <= radius for h in gids):
            out.append(g.gid)
    return tuple(out)


# ---------------------------------------------------------------------------
# Circuit surgery used by the coevolution reductions.

def pin_inputs(c: Circuit, pins: Mapping[int, int]) -> Circuit:
    """Replace selected input gates by defined constants."""
    gates = []
    for g in c.gates:
        if g.gid in pins:
            if g.kind != INPUT:
                raise ValueError(f"gate {g.gid} is not an input")
            gates.append(Gate(g.gid, DEFINED, g.position, (), (1 if pins[g.gid] else 0,)))
        else:
            gates.append(g)
    return Circuit(gates, c.output_gate, c.clauses, c.bit_depth, c.width, c.height)


def _shift(c: Circuit, offset: int, dx: Fraction):
    gates = []
    for g in c.gates:
        x, y, b = g.position
        gates.append(Gate(g.gid + offset, g.kind, (Fraction(x) + dx, Fraction(y), b),
                          tuple(d + offset for d in g.deps), g.table))
    clauses = [frozenset((gid + offset, bit) for gid, bit in cl) for cl in c.clauses]
    return gates, clauses


def conjoin(circuits: Sequence[Circuit]) -> Circuit:
    """Disjoint union of circuits plus an AND chain over their outputs."""
    if not circuits:
        raise ValueError("need at least one circuit")
    gates: list[Gate] = []
    clauses: list[Clause] = []
    outs = []
    dx = Fraction(0)
    top = Fraction(0)
    for c in circuits:
        shifted, cls = _shift(c, len(gates), dx)
        gates.extend(shifted)
        clauses.extend(cls)
        outs.append(c.output_gate + len(gates) - len(c.gates))
        dx += max(Fraction(g.position[0]) for g in c.gates) - \
            min(Fraction(g.position[0]) for g in c.gates) + 2
        top = max(top, max(Fraction(g.position[1]) for g in c.gates))
    acc = outs[0]
    for i, o in enumerate(outs[1:]):
        gid = len(gates)
        gates.append(Gate(gid, DEFINED, (Fraction(i), top + 1, 0), (acc, o), (0, 0, 0, 1)))
        acc = gid
    return Circuit(gates, acc, clauses, max(c.bit_depth for c in circuits))


def compose(front: Circuit, back: Circuit, wiring: Mapping[int, int]) -> Circuit:
    """Feed gates of ``front`` into input gates of ``back``.

    ``wiring`` maps each wired input gate of ``back`` to a gate of ``front``;
    unwired inputs of ``back`` stay inputs. Output is the back circuit's.
    """
    gates: list[Gate] = list(front.gates)
    clauses: list[Clause] = list(front.clauses)
    offset = len(gates)
    ybase = max(Fraction(g.position[1]) for g in front.gates) + 1
    for g in back.gates:
        x, y, b = g.position
        pos = (Fraction(x), Fraction(y) + ybase, b)
        if g.kind == INPUT and g.gid in wiring:
            # identity gate reading the wired front gate
            gates.append(Gate(g.gid + offset, DEFINED, pos, (wiring[g.gid],), (0, 1)))
        else:
            gates.append(Gate(g.gid + offset, g.kind, pos,
                              tuple(d + offset for d in g.deps), g.table))
    clauses.extend(frozenset((gid + offset, bit) for gid, bit in cl) for cl in back.clauses)
    return Circuit(gates, back.output_gate + offset, clauses,
                   max(front.bit_depth, back.bit_depth))


def negate_output(c: Circuit) -> Circuit:
    gates = list(c.gates)
    x, y, b = c.gates[c.output_gate].position
    gid = len(gates)
    gates.append(Gate(gid, DEFINED, (Fraction(x), Fraction(y) + 1, b), (c.output_gate,), (1, 0)))
    return Circuit(gates, gid, c.clauses, c.bit_depth, c.width, c.height)
