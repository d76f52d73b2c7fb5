"""Bounded-time Turing machines and their compilation into rectangle circuits.

A machine reads a fixed-length input, halts within its time bound with the
head back on the start cell, and the halting state encodes the output bit.
The whole run fits in a (2n+1) x n cell rectangle; every bit of every cell
label becomes one circuit gate computed from the three cells below it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .circuits import Circuit, DEFINED, Gate, INPUT
from .errors import MachineError, NonHalting, NotNormalized

LEFT, STAY, RIGHT = "L", "S", "R"
_MOVES = {LEFT: -1, STAY: 0, RIGHT: 1}


@dataclass(frozen=True)
class TuringMachine:
    state_count: int
    alphabet: tuple[str, ...]          # single-character symbols; blank included
    blank: str
    transition: dict                   # (state, symbol) -> (state, symbol, move)
    output_states: dict                # halting state -> output bit
    t: int                             # input length
    n: int                             # time bound / rectangle height

    def __post_init__(self):
        if self.state_count < 1 or self.t < 1 or self.n < 1:
            raise MachineError("state_count, t and n must be positive")
        if self.t > self.n + 1:
            raise MachineError(f"input length {self.t} does not fit the 2n+1 window (n={self.n})")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise MachineError("alphabet symbols must be distinct")
        if self.blank not in self.alphabet:
            raise MachineError("blank symbol must belong to the alphabet")
        for s in range(self.state_count):
            for a in self.alphabet:
                if (s, a) not in self.transition:
                    raise MachineError(f"transition missing for state {s}, symbol {a!r}")
        for (s, a), (s2, a2, mv) in self.transition.items():
            if not (0 <= s < self.state_count and 0 <= s2 < self.state_count):
                raise MachineError(f"transition ({s},{a!r}) uses an unknown state")
            if a not in self.alphabet or a2 not in self.alphabet:
                raise MachineError(f"transition ({s},{a!r}) uses an unknown symbol")
            if mv not in _MOVES:
                raise MachineError(f"transition ({s},{a!r}) has bad move {mv!r}")
        for s, bit in self.output_states.items():
            if not 0 <= s < self.state_count:
                raise MachineError(f"output state {s} unknown")
            if bit not in (0, 1):
                raise MachineError(f"output bit for state {s} must be 0/1")
        if not self.output_states:
            raise MachineError("machine has no halting state")

    # -- label encoding ----------------------------------------------------

    @property
    def symbol_bits(self) -> int:
        return max(1, (len(self.alphabet) - 1).bit_length())

    @property
    def state_bits(self) -> int:
        return (self.state_count - 1).bit_length()

    @property
    def label_bits(self) -> int:
        return self.symbol_bits + 1 + self.state_bits

    def is_halting(self, state: int) -> bool:
        return state in self.output_states

    def encode_label(self, symbol: str, head: int, state: int) -> int:
        si = self.alphabet.index(symbol)
        return si | (1 if head else 0) << self.symbol_bits | state << (self.symbol_bits + 1)

    def decode_label(self, v: int) -> tuple[str, int, int]:
        si = v & ((1 << self.symbol_bits) - 1)
        head = (v >> self.symbol_bits) & 1
        state = v >> (self.symbol_bits + 1)
        if si >= len(self.alphabet):    # garbage bits decode to blank, deterministic
            si = self.alphabet.index(self.blank)
        state %= self.state_count
        return self.alphabet[si], head, state


def normalize_transitions(transition: dict, output_states: dict, alphabet) -> dict:
    """Fill frozen self-loops for halting states so the mapping is total."""
    full = dict(transition)
    for s in output_states:
        for a in alphabet:
            full.setdefault((s, a), (s, a, STAY))
    return full


def run_machine(m: TuringMachine, input_str) -> tuple[int, list[list[int]]]:
    """Simulate; return (output bit, n x (2n+1) grid of encoded cell labels).

    Row 0 is the initial configuration; the configuration freezes once the
    machine halts. Raises NonHalting / NotNormalized when the run breaks the
    bounded-rectangle discipline.
    """
    if len(input_str) != m.t:
        raise MachineError(f"input length {len(input_str)} != t={m.t}")
    width = 2 * m.n + 1
    tape = [m.blank] * width
    for i, ch in enumerate(input_str):
        sym = str(ch)
        if sym not in m.alphabet:
            raise MachineError(f"input symbol {sym!r} not in alphabet")
        tape[m.n + i] = sym
    head, state = m.n, 0
    history = []
    for _ in range(m.n):
        row = [m.encode_label(tape[x], 1 if x == head else 0,
                              state if x == head else 0) for x in range(width)]
        history.append(row)
        if m.is_halting(state):
            continue                       # frozen after halting
        state2, sym2, mv = m.transition[(state, tape[head])]
        tape[head] = sym2
        head += _MOVES[mv]
        assert 0 <= head < width, "head escaped the rectangle window"
        state = state2
    if not m.is_halting(state):
        raise NonHalting(f"machine still running after {m.n - 1} steps (bound n={m.n})")
    if head != m.n:
        raise NotNormalized(f"halted with head at cell {head}, expected start cell {m.n}")
    return m.output_states[state], history


# ---------------------------------------------------------------------------
# Compilation

def _label_maps(m: TuringMachine):
    """Per-encoded-label lookup arrays with total (garbage-clamped) semantics."""
    size = 1 << m.label_bits
    sym = np.empty(size, dtype=np.int64)
    head = np.empty(size, dtype=np.int64)
    halt = np.empty(size, dtype=np.int64)
    nstate = np.empty(size, dtype=np.int64)   # transition target state
    nsym = np.empty(size, dtype=np.int64)     # written symbol index
    move = np.empty(size, dtype=np.int64)     # -1 / 0 / 1
    cur = np.empty(size, dtype=np.int64)      # current (clamped) state
    for v in range(size):
        s, h, q = m.decode_label(v)
        si = m.alphabet.index(s)
        sym[v], head[v], cur[v] = si, h, q
        halt[v] = 1 if m.is_halting(q) else 0
        q2, s2, mv = m.transition[(q, s)]
        nstate[v], nsym[v], move[v] = q2, m.alphabet.index(s2), _MOVES[mv]
    return sym, head, halt, nstate, nsym, move, cur


def _next_label_cube(m: TuringMachine) -> np.ndarray:
    """next_label[left, center, right] for all encoded label triples."""
    sym, head, halt, nstate, nsym, move, cur = _label_maps(m)
    size = 1 << m.label_bits
    l = np.arange(size).reshape(size, 1, 1)
    c = np.arange(size).reshape(1, size, 1)
    r = np.arange(size).reshape(1, 1, size)

    c_head = head[c].astype(bool)
    c_halt = halt[c].astype(bool)
    c_acts = c_head & ~c_halt
    new_sym = np.where(c_acts, nsym[c], sym[c])

    stays = c_head & (c_halt | (move[c] == 0))
    state_center = np.where(c_halt, cur[c], nstate[c])
    from_left = head[l].astype(bool) & ~halt[l].astype(bool) & (move[l] == 1)
    from_right = head[r].astype(bool) & ~halt[r].astype(bool) & (move[r] == -1)

    new_head = stays | from_left | from_right
    # priority center > left > right resolves garbage multi-head patterns
    new_state = np.where(stays, state_center,
                         np.where(from_left, nstate[l],
                                  np.where(from_right, nstate[r], 0)))
    new_state = np.where(new_head, new_state, 0)
    label = (new_sym
             | new_head.astype(np.int64) << m.symbol_bits
             | new_state << (m.symbol_bits + 1))
    return label.astype(np.uint32)


def compile_rectangle(m: TuringMachine) -> Circuit:
    """One gate per (cell, label bit); deps are the three cells below.

    Row-0 input cells expose the symbol LSB as circuit inputs (symbols 0/1
    must be the first two alphabet entries); everything else in row 0 is a
    defined constant encoding the initial configuration. One readout gate on
    top maps the halting state of the start cell to the output bit.
    """
    if m.alphabet[0] != "0" or m.alphabet[1] != "1":
        raise MachineError("compilation expects alphabet to start with symbols '0', '1'")
    w = m.label_bits
    width = 2 * m.n + 1
    cube = _next_label_cube(m)
    size = 1 << w
    full = cube.transpose(2, 1, 0).ravel()            # index = l + (c<<w) + (r<<2w)
    blank_lbl = m.encode_label(m.blank, 0, 0)
    noleft = cube[blank_lbl, :, :].transpose(1, 0).ravel()    # index = c + (r<<w)
    noright = cube[:, :, blank_lbl].transpose(1, 0).ravel()   # index = l + (c<<w)
    bit_tables = {
        "full": [((full >> b) & 1).astype(np.uint8) for b in range(w)],
        "noleft": [((noleft >> b) & 1).astype(np.uint8) for b in range(w)],
        "noright": [((noright >> b) & 1).astype(np.uint8) for b in range(w)],
    }
    for tabs in bit_tables.values():
        for t in tabs:
            t.setflags(write=False)

    def gid(x, y, b):
        return (y * width + x) * w + b

    gates: list[Gate] = []
    start = m.n
    for y in range(m.n):
        for x in range(width):
            for b in range(w):
                pos = (Fraction(x), Fraction(y), b)
                if y == 0:
                    is_input_cell = start <= x < start + m.t
                    if is_input_cell and b == 0:
                        gates.append(Gate(gid(x, y, b), INPUT, pos))
                        continue
                    if is_input_cell:
                        head = 1 if x == start else 0
                        lbl = (0 | head << m.symbol_bits)      # state 0, high sym bits 0
                    else:
                        lbl = blank_lbl
                    gates.append(Gate(gid(x, y, b), DEFINED, pos, (), ((lbl >> b) & 1,)))
                    continue
                cells = [cx for cx in (x - 1, x, x + 1) if 0 <= cx < width]
                deps = tuple(gid(cx, y - 1, bb) for cx in cells for bb in range(w))
                if x == 0:
                    table = bit_tables["noleft"][b]
                elif x == width - 1:
                    table = bit_tables["noright"][b]
                else:
                    table = bit_tables["full"][b]
                gates.append(Gate(gid(x, y, b), DEFINED, pos, deps, table))

    # readout: head present and halting state mapped through output_states
    head_and_state = tuple(gid(start, m.n - 1, b) for b in range(m.symbol_bits, w))
    table = []
    for combo in range(1 << len(head_and_state)):
        head = combo & 1
        state = (combo >> 1) % m.state_count
        table.append(m.output_states.get(state, 0) if head and m.is_halting(state) else 0)
    out = len(gates)
    gates.append(Gate(out, DEFINED, (Fraction(start), Fraction(m.n), 0),
                      head_and_state, tuple(table)))
    return Circuit(gates, out, (), bit_depth=w, width=width, height=m.n)


def history_bits(m: TuringMachine, history) -> list[int]:
    """Flatten a run_machine grid into the compiled circuit's gate order."""
    w = m.label_bits
    bits = []
    for row in history:
        for lbl in row:
            bits.extend((lbl >> b) & 1 for b in range(w))
    return bits
