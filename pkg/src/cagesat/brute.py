"""Brute-force oracles: direct enumeration, kept independent of the local checkers."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .circuits import (Circuit, INPUT, assignment_is_valid, clause_is_violated,
                       gate_is_fulfilled)
from .errors import TooLarge


def free_gates(c: Circuit) -> list[int]:
    """Gates whose value is quantified over in proofs (everything but the output)."""
    return [g.gid for g in c.gates if g.gid != c.output_gate]


def pinned_assignments(c: Circuit, limit: int = 1 << 22):
    """Yield every total assignment with the output gate pinned to 1."""
    free = free_gates(c)
    if 1 << len(free) > limit:
        raise TooLarge(f"{len(free)} free gates is beyond exhaustive enumeration")
    asg = [0] * len(c.gates)
    asg[c.output_gate] = 1
    for word in range(1 << len(free)):
        for i, gid in enumerate(free):
            asg[gid] = (word >> i) & 1
        yield asg


def satisfiable(c: Circuit, limit: int = 1 << 22) -> list[int] | None:
    """Search all pinned assignments for one fulfilling every gate and clause."""
    for asg in pinned_assignments(c, limit):
        if assignment_is_valid(c, asg):
            return list(asg)
    return None


def satisfying_inputs(c: Circuit) -> list[tuple[int, ...]]:
    """All input words on which forward evaluation outputs 1."""
    outs = evaluate_on_all_inputs(c)
    k = len(c.input_gates)
    return [tuple((word >> i) & 1 for i in range(k))
            for word in range(1 << k) if outs[word]]


def evaluate_on_all_inputs(c: Circuit) -> np.ndarray:
    """Vectorized forward evaluation over every input word.

    Returns an array of output bits indexed by the input word (input gate i
    is bit i of the word).
    """
    inputs = c.input_gates
    if len(inputs) > 20:
        raise TooLarge("too many inputs for an exhaustive sweep")
    rows = 1 << len(inputs)
    cols = np.zeros((len(c.gates), rows), dtype=np.uint8)
    words = np.arange(rows, dtype=np.int64)
    for i, gid in enumerate(inputs):
        cols[gid] = (words >> i) & 1
    for g in sorted(c.gates, key=lambda g: (g.position[1], g.gid)):
        if g.kind == INPUT:
            continue
        idx = np.zeros(rows, dtype=np.int64)
        for pos, d in enumerate(g.deps):
            idx |= cols[d].astype(np.int64) << pos
        table = np.asarray(g.table, dtype=np.uint8)
        cols[g.gid] = table[idx]
    return cols[c.output_gate].copy()


def polynomial_values(f, c: Circuit, limit: int = 1 << 18) -> set[Fraction]:
    """Every value a lamp polynomial takes over pinned assignments (oracle)."""
    from .polynomials import evaluate_polynomial
    return {evaluate_polynomial(f, asg) for asg in pinned_assignments(c, limit)}


def is_invariant(f, c: Circuit, limit: int = 1 << 18) -> bool:
    vals = polynomial_values(f, c, limit)
    return len(vals) == 1


def bulb_truth_bitset(c: Circuit, bulb, free: list[int]) -> int:
    """Bitset over pinned-assignment words of when the bulb lights."""
    pos = {gid: i for i, gid in enumerate(free)}
    word = 0
    mask = 0
    full = (1 << (1 << len(free))) - 1
    for gid, bit in bulb.requirements:
        if gid == c.output_gate:
            if bit == 0:
                return 0
            continue
        i = pos[gid]
        mask |= 1 << i
        word |= bit << i
    # build by blocks: assignments whose masked bits equal word
    out = 0
    for w in range(1 << len(free)):
        if w & mask == word:
            out |= 1 << w
    return out


def invariance_kernel_dimension(c: Circuit, monomials, bulb_system, limit: int = 1 << 14) -> int:
    """Dimension of {coefficient vectors : polynomial value constant on pinned cube}.

    Independent oracle for cocyclic_space: ranks the assignment-difference
    matrix directly with exact arithmetic.
    """
    from .bulbs import evaluate_bulb
    free = free_gates(c)
    if 1 << len(free) > limit:
        raise TooLarge("circuit too large for the invariance-kernel oracle")
    rows = []
    base_row = None
    for asg in pinned_assignments(c):
        row = []
        for mono in monomials:
            v = 1
            for bid in mono:
                if not evaluate_bulb(bulb_system.bulbs[bid], asg):
                    v = 0
                    break
            row.append(Fraction(v))
        if base_row is None:
            base_row = row
        else:
            rows.append([a - b for a, b in zip(row, base_row)])
    rank = _dense_rank(rows)
    return len(monomials) - rank


def _dense_rank(rows) -> int:
    rows = [list(r) for r in rows if any(r)]
    rank = 0
    col = 0
    ncols = len(rows[0]) if rows else 0
    while rows and col < ncols:
        piv = next((i for i, r in enumerate(rows) if r[col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[piv], rows[rank] = rows[rank], rows[piv]
        pr = rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                fac = rows[i][col] / pr[col]
                rows[i] = [a - fac * b for a, b in zip(rows[i], pr)]
        rows = [r for r in rows if any(r)]
        rank += 1
        col += 1
    return rank


def violation_witness(c: Circuit, asg) -> tuple[str, int] | None:
    """First violated gate or clause under a total assignment."""
    for g in c.gates:
        if not gate_is_fulfilled(c, g.gid, asg):
            return ("gate", g.gid)
    for i, cl in enumerate(c.clauses):
        if clause_is_violated(cl, asg):
            return ("clause", i)
    return None
