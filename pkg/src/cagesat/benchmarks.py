"""Test corpus: small machines, hand circuits, random circuits, pigeonhole.

Everything here is deterministic; random generators take an explicit rng.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .bulbs import Bulb, BulbSystem, close_under_inclusion
from .circuits import Circuit, DEFINED, Gate, INPUT
from .tm import STAY, LEFT, RIGHT, TuringMachine, normalize_transitions

ALPHA = ("0", "1", "_", "#")


def _machine(states, transition, outputs, t, n, alphabet=ALPHA):
    return TuringMachine(states, alphabet, "_",
                         normalize_transitions(transition, outputs, alphabet),
                         outputs, t, n)


def const_machine(bit: int, t: int = 2, n: int = 4) -> TuringMachine:
    return _machine(1, {}, {0: bit}, t, n)


def copy_bit_machine(t: int = 1, n: int = 3) -> TuringMachine:
    tr = {(0, "0"): (1, "0", STAY), (0, "1"): (2, "1", STAY),
          (0, "_"): (1, "_", STAY), (0, "#"): (1, "#", STAY)}
    return _machine(3, tr, {1: 0, 2: 1}, t, n)


def not_bit_machine(t: int = 2, n: int = 3) -> TuringMachine:
    tr = {(0, "0"): (2, "0", STAY), (0, "1"): (1, "1", STAY),
          (0, "_"): (1, "_", STAY), (0, "#"): (1, "#", STAY)}
    return _machine(3, tr, {1: 0, 2: 1}, t, n)


def second_bit_machine(t: int = 2, n: int = 4) -> TuringMachine:
    tr = {(0, s): (1, s, RIGHT) for s in ALPHA}
    tr.update({(1, "0"): (2, "0", LEFT), (1, "1"): (3, "1", LEFT),
               (1, "_"): (2, "_", LEFT), (1, "#"): (2, "#", LEFT)})
    return _machine(4, tr, {2: 0, 3: 1}, t, n)


def binary_op_machine(op, t: int = 2, n: int = 4) -> TuringMachine:
    """Read two leading bits, halt at the start cell with op(b0, b1)."""
    tr = {}
    for s in ALPHA:
        bit = 1 if s == "1" else 0
        tr[(0, s)] = (1 + bit, s, RIGHT)
    for first in (0, 1):
        for s in ALPHA:
            bit = 1 if s == "1" else 0
            tr[(1 + first, s)] = (3 + op(first, bit), s, LEFT)
    return _machine(5, tr, {3: 0, 4: 1}, t, n)


def dfa_scan_machine(dfa_size: int, delta, accept, t: int, n: int | None = None) -> TuringMachine:
    """Mark the start cell, scan the input through a DFA, walk back, halt.

    States: 0 start; 1..S right-scan; S+1..2S left-walk; 2S+1..3S halting.
    Needs n >= 2t + 2 so the halt row is inside the rectangle.
    """
    if n is None:
        n = 2 * t + 2
    S = dfa_size
    tr = {}
    for sym in ("0", "1"):
        tr[(0, sym)] = (1 + delta(0, int(sym)), "#", RIGHT)
    for sym in ("_", "#"):
        tr[(0, sym)] = (1 + 2 * S + 0, sym, STAY)       # garbage start: halt
    for s in range(S):
        for sym in ("0", "1"):
            tr[(1 + s, sym)] = (1 + delta(s, int(sym)), sym, RIGHT)
        for sym in ("_", "#"):
            tr[(1 + s, sym)] = (1 + S + s, sym, LEFT)    # end of input: turn
        for sym in ("0", "1", "_"):
            tr[(1 + S + s, sym)] = (1 + S + s, sym, LEFT)
        tr[(1 + S + s, "#")] = (1 + 2 * S + s, "#", STAY)
    outputs = {1 + 2 * S + s: (1 if accept(s) else 0) for s in range(S)}
    return _machine(1 + 3 * S, tr, outputs, t, n)


def parity_machine(t: int) -> TuringMachine:
    return dfa_scan_machine(2, lambda s, x: s ^ x, lambda s: s == 1, t)


def contains_11_machine(t: int) -> TuringMachine:
    def delta(s, x):
        if s == 2:
            return 2
        if x == 0:
            return 0
        return 2 if s == 1 else 1
    return dfa_scan_machine(3, delta, lambda s: s == 2, t)


def majority3_machine() -> TuringMachine:
    return dfa_scan_machine(3, lambda s, x: min(s + x, 2), lambda s: s == 2, 3)


def corpus_machines() -> list[tuple[str, TuringMachine]]:
    """The >= 10 machine corpus behind the TM<->circuit equivalence gate."""
    return [
        ("const0", const_machine(0, t=2, n=4)),
        ("const1", const_machine(1, t=3, n=4)),
        ("const1-wide", const_machine(1, t=8, n=9)),
        ("copy", copy_bit_machine(t=1, n=3)),
        ("not", not_bit_machine(t=2, n=3)),
        ("second-bit", second_bit_machine(t=2, n=4)),
        ("or2", binary_op_machine(lambda a, b: a | b, t=2, n=4)),
        ("and2", binary_op_machine(lambda a, b: a & b, t=3, n=4)),
        ("xor2", binary_op_machine(lambda a, b: a ^ b, t=2, n=4)),
        ("parity3", parity_machine(3)),
        ("parity4", parity_machine(4)),
        ("contains11", contains_11_machine(4)),
        ("majority3", majority3_machine()),
    ]


def solver_machines() -> list[tuple[str, TuringMachine]]:
    """50 satisfiable machines compiling to <= 200 gates, the solver baseline.

    Weighted toward plentiful-solution instances: with lean input/output bulb
    families the interior tables carry no sampling signal, so the realistic
    baseline mixes always-satisfied machines with densely satisfiable ones.
    """
    out = []
    for t in range(1, 5):
        out.append((f"const1-n3-t{t}", const_machine(1, t=t, n=3)))
    for t in range(1, 6):
        out.append((f"const1-n4-t{t}", const_machine(1, t=t, n=4)))
    for t in range(1, 7):
        out.append((f"const1-n5-t{t}", const_machine(1, t=t, n=5)))
    for n in (2, 3):
        out.append((f"const1-n{n}", const_machine(1, t=1, n=n)))
    for t in range(2, 5):
        out.append((f"or2-t{t}", binary_op_machine(lambda a, b: a | b, t=t, n=3)))
        out.append((f"nand2-t{t}", binary_op_machine(lambda a, b: 1 - (a & b), t=t, n=3)))
        out.append((f"imp2-t{t}", binary_op_machine(lambda a, b: (1 - a) | b, t=t, n=3)))
        out.append((f"rev-imp2-t{t}", binary_op_machine(lambda a, b: a | (1 - b), t=t, n=3)))
    for t in range(1, 5):
        out.append((f"copy-t{t}", copy_bit_machine(t=t, n=3)))
    for t in range(2, 5):
        out.append((f"not-t{t}", not_bit_machine(t=t, n=3)))
    for t in range(2, 5):
        out.append((f"xor2-t{t}", binary_op_machine(lambda a, b: a ^ b, t=t, n=3)))
    for t in range(2, 6):
        out.append((f"second-t{t}", second_bit_machine(t=t, n=4)))
    for t in range(1, 5):
        out.append((f"copy-n4-t{t}", copy_bit_machine(t=t, n=4)))
    for t in range(2, 5):
        out.append((f"not-n4-t{t}", not_bit_machine(t=t, n=4)))
    assert len(out) == 50
    return out


# ---------------------------------------------------------------------------
# Hand circuits

def identity_circuit() -> Circuit:
    g = [Gate(0, INPUT, (Fraction(0), Fraction(0), 0))]
    return Circuit(g, 0)


def const_circuit(bit: int) -> Circuit:
    g = [Gate(0, INPUT, (Fraction(0), Fraction(0), 0)),
         Gate(1, DEFINED, (Fraction(0), Fraction(1), 0), (), (bit,))]
    return Circuit(g, 1)


def not_circuit() -> Circuit:
    g = [Gate(0, INPUT, (Fraction(0), Fraction(0), 0)),
         Gate(1, DEFINED, (Fraction(0), Fraction(1), 0), (0,), (1, 0))]
    return Circuit(g, 1)


def contradiction_circuit() -> Circuit:
    """a AND NOT a: the canonical tiny unsatisfiable circuit."""
    g = [Gate(0, INPUT, (Fraction(0), Fraction(0), 0)),
         Gate(1, DEFINED, (Fraction(0), Fraction(1), 0), (0,), (1, 0)),
         Gate(2, DEFINED, (Fraction(0), Fraction(2), 0), (0, 1), (0, 0, 0, 1))]
    return Circuit(g, 2)


def xor_self_circuit() -> Circuit:
    """out = a XOR a via a copy chain: constant 0, hence unsatisfiable."""
    g = [Gate(0, INPUT, (Fraction(0), Fraction(0), 0)),
         Gate(1, DEFINED, (Fraction(0), Fraction(1), 0), (0,), (1, 0)),
         Gate(2, DEFINED, (Fraction(0), Fraction(2), 0), (1,), (1, 0)),
         Gate(3, DEFINED, (Fraction(0), Fraction(3), 0), (0, 2), (0, 1, 1, 0))]
    return Circuit(g, 3)


def and_chain_circuit(width: int) -> Circuit:
    gates = [Gate(i, INPUT, (Fraction(i), Fraction(0), 0)) for i in range(width)]
    acc = 0
    for i in range(1, width):
        gid = len(gates)
        gates.append(Gate(gid, DEFINED, (Fraction(i), Fraction(i), 0),
                          (acc, i), (0, 0, 0, 1)))
        acc = gid
    return Circuit(gates, acc)


def random_circuit(rng: np.random.Generator, n_inputs: int, n_defined: int,
                   clause_count: int = 0) -> Circuit:
    """Random layered circuit; positions keep each layer metrically tight."""
    gates = [Gate(i, INPUT, (Fraction(i), Fraction(0), 0)) for i in range(n_inputs)]
    for j in range(n_defined):
        gid = len(gates)
        fanin = int(rng.integers(1, 3))
        deps = tuple(int(d) for d in rng.choice(gid, size=min(fanin, gid), replace=False))
        table = tuple(int(b) for b in rng.integers(0, 2, size=1 << len(deps)))
        gates.append(Gate(gid, DEFINED, (Fraction(int(rng.integers(0, n_inputs + 1))),
                                         Fraction(j + 1), 0), deps, table))
    clauses = []
    for _ in range(clause_count):
        size = int(rng.integers(1, 3))
        who = rng.choice(len(gates), size=size, replace=False)
        clauses.append(tuple((int(g), int(rng.integers(0, 2))) for g in who))
    return Circuit(gates, len(gates) - 1, clauses)


# ---------------------------------------------------------------------------
# The Dirichlet (pigeonhole) circuit

def io_bulb_system(c: Circuit) -> BulbSystem:
    """Input and output singletons only: the lean family for solver runs.

    Interior gates are left to forward evaluation; this is the practical
    "use few bulbs" end of the trade-off between proof strength and cost.
    """
    bulbs = {Bulb.make(())}
    for g in list(c.input_gates) + [c.output_gate]:
        bulbs.add(Bulb.make(((g, 0),)))
        bulbs.add(Bulb.make(((g, 1),)))
    return BulbSystem(c, bulbs, k=Fraction(1), g_max=1)


def pigeonhole_circuit(n: int) -> tuple[Circuit, dict]:
    """The Dirichlet instance: an n x (n+1) input grid where every column must
    contain a 1 while every row tolerates at most one.

    Checks are clauses of a generalized circuit: one forbidden pattern per
    in-row pair of ones and one per all-zero column; the output gate is a
    pinned constant. The grid is metrically tight (diameter 1/2) so every
    clause is local and bulbs over any part of the grid stay inside k = 1.
    """
    N = n + 1
    hx = Fraction(1, 2 * N)
    hy = Fraction(1, 2 * n)
    gates: list[Gate] = []
    x = []
    for i in range(n):
        row = []
        for j in range(N):
            gid = len(gates)
            gates.append(Gate(gid, INPUT, (j * hx, i * hy, 0)))
            row.append(gid)
        x.append(row)
    out = len(gates)
    gates.append(Gate(out, DEFINED, (Fraction(0), Fraction(2), 0), (), (1,)))
    clauses = []
    for i in range(n):
        for j in range(N):
            for j2 in range(j + 1, N):
                clauses.append(((x[i][j], 1), (x[i][j2], 1)))
    for j in range(N):
        clauses.append(tuple((x[i][j], 0) for i in range(n)))
    circ = Circuit(gates, out, clauses, bit_depth=1)
    return circ, {"n": n, "x": x}


def pigeonhole_bulbs(c: Circuit, meta: dict) -> BulbSystem:
    """Bulb family for the grid: singletons, per-column patterns, all-zero
    bulbs over column subsets, in-row pair patterns, and full-grid patterns.

    Full grids make every total input pattern a bulb; each one conceals a
    clause violation (pigeonhole), so the whole top layer is protected.
    """
    n = meta["n"]
    x = meta["x"]
    N = n + 1
    bulbs: set[Bulb] = {Bulb.make(())}
    grid = [x[i][j] for i in range(n) for j in range(N)]
    for g in grid:
        bulbs.add(Bulb.make(((g, 0),)))
        bulbs.add(Bulb.make(((g, 1),)))
    for j in range(N):
        col = tuple(x[i][j] for i in range(n))
        for word in range(1 << n):
            bulbs.add(Bulb.make(tuple((g, (word >> i) & 1) for i, g in enumerate(col))))
    for mask in range(1, 1 << N):
        cols = [j for j in range(N) if (mask >> j) & 1]
        bulbs.add(Bulb.make(tuple((x[i][j], 0) for j in cols for i in range(n))))
    for i in range(n):
        for j in range(N):
            for j2 in range(j + 1, N):
                for b1 in (0, 1):
                    for b2 in (0, 1):
                        bulbs.add(Bulb.make(((x[i][j], b1), (x[i][j2], b2))))
    for word in range(1 << (n * N)):
        bulbs.add(Bulb.make(tuple((g, (word >> idx) & 1) for idx, g in enumerate(grid))))
    return BulbSystem(c, bulbs, k=Fraction(1), g_max=n * N)
