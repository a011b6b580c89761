"""Exact simulation of circuits on a stabilizer tableau.

Qubits are mapped onto recycled tableau slots: a qubit takes a slot at its
first location and returns it, reset to |0>, right after it is measured.
Long circuits with thousands of fresh ancillas therefore only need as many
slots as are simultaneously alive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuit import (
    CLASSICAL_PAULI,
    GATE_CNOT,
    GATE_H,
    GATE_X,
    GATE_Z,
    IDLE,
    MEAS_X,
    MEAS_Z,
    PREP0,
    PREP_PLUS,
    Circuit,
    MalformedCircuit,
    TrackedLogical,
    evaluate,
)
from .code import build_code
from .decoder import decode_sets
from .noise import FaultAssignment
from .tableau import Tableau

__all__ = ["RunResult", "SlotMap", "ideal_readout", "run", "slot_map"]


@dataclass(frozen=True)
class SlotMap:
    """Tableau slot of every qubit, and how many slots the circuit needs."""

    slots: tuple[int, ...]
    width: int


@lru_cache(maxsize=64)
def _slot_map_cached(circuit: Circuit) -> SlotMap:
    return _compute_slot_map(circuit)


def slot_map(circuit: Circuit) -> SlotMap:
    return _slot_map_cached(circuit)


def _compute_slot_map(circuit: Circuit) -> SlotMap:
    slots = [-1] * circuit.num_qubits
    free: list[int] = []
    width = 0

    def take() -> int:
        nonlocal width
        if free:
            free.sort()
            return free.pop(0)
        width += 1
        return width - 1

    # qubits that idle from the first step hold a slot from the start
    first_step = circuit.steps[0].locations if circuit.steps else ()
    for loc in first_step:
        for q in loc.qubits:
            if slots[q] < 0:
                slots[q] = take()
    for step in circuit.steps:
        released = []
        for loc in step.locations:
            for q in loc.qubits:
                if slots[q] < 0:
                    slots[q] = take()
            if loc.kind in (MEAS_Z, MEAS_X):
                released.append(slots[loc.qubits[0]])
        for op in step.classical:
            if not isinstance(op, TrackedLogical):
                q = op.qubits[0]
                if slots[q] < 0:
                    slots[q] = take()
        free.extend(released)
    # qubits that never act still need a column for readout
    for q in range(circuit.num_qubits):
        if slots[q] < 0:
            slots[q] = take()
    return SlotMap(tuple(slots), width)


@dataclass
class RunResult:
    circuit: Circuit
    outcomes: np.ndarray  # int8, -1 where unwritten
    random: np.ndarray  # bool, measurement was a coin flip
    tracked: dict = field(default_factory=dict)  # block -> {"X": bit, "Z": bit}
    tableau: Tableau | None = None
    slots: SlotMap | None = None

    def output_qubits(self) -> list[int]:
        blk = self.circuit.blocks[self.circuit.output]
        return [self.slots.slots[q] for q in blk.qubits]


def _apply_fault(tab: Tableau, slots, loc, paulis) -> None:
    for q, p in zip(loc.qubits, paulis):
        if p != "I":
            tab.apply_pauli(slots[q], p)


def run(circuit: Circuit, faults: FaultAssignment | None = None,
        rng: np.random.Generator | int | None = None, check: bool = False,
        forced_outcomes: dict | None = None) -> RunResult:
    """Apply the circuit with injected faults; random outcomes come from ``rng``.

    Fault Paulis act after the location's ideal action, except on measurements
    where they act just before. ``check`` validates the tableau after every
    step. ``forced_outcomes`` pins selected random measurement results.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    sm = slot_map(circuit)
    slots = sm.slots
    tab = Tableau(max(sm.width, 1))
    injected = faults.by_location() if faults else {}
    outcomes = np.full(circuit.num_registers, -1, dtype=np.int8)
    random = np.zeros(circuit.num_registers, dtype=bool)
    tracked: dict = {}
    memo: dict = {}  # registers are write-once, so guard values never go stale
    loc_index = 0
    for step in circuit.steps:
        for loc in step.locations:
            kind = loc.kind
            fault = injected.get(loc_index)
            if kind == MEAS_Z or kind == MEAS_X:
                if fault is not None:
                    _apply_fault(tab, slots, loc, fault)
                s = slots[loc.qubits[0]]
                forced = None if forced_outcomes is None else forced_outcomes.get(loc.register)
                if kind == MEAS_Z:
                    bit, was_random = tab.measure_z(s, rng, forced)
                    if bit:
                        tab.pauli_x(s)
                else:
                    bit, was_random = tab.measure_x(s, rng, forced)
                    tab.h(s)
                    if bit:
                        tab.pauli_x(s)
                outcomes[loc.register] = bit
                random[loc.register] = was_random
            else:
                if kind == PREP0:
                    tab.reset(slots[loc.qubits[0]], rng)
                elif kind == PREP_PLUS:
                    s = slots[loc.qubits[0]]
                    tab.reset(s, rng)
                    tab.h(s)
                elif kind == GATE_H:
                    tab.h(slots[loc.qubits[0]])
                elif kind == GATE_CNOT:
                    tab.cnot(slots[loc.qubits[0]], slots[loc.qubits[1]])
                elif kind == GATE_X:
                    tab.pauli_x(slots[loc.qubits[0]])
                elif kind == GATE_Z:
                    tab.pauli_z(slots[loc.qubits[0]])
                elif kind != IDLE:
                    raise MalformedCircuit(f"unknown location kind {kind}")
                if fault is not None:
                    _apply_fault(tab, slots, loc, fault)
            loc_index += 1
        for op in step.classical:
            if not evaluate(op.guard, outcomes, memo):
                continue
            if isinstance(op, TrackedLogical):
                entry = tracked.setdefault(op.block, {"X": 0, "Z": 0})
                entry[op.pauli] ^= 1
            elif op.kind == CLASSICAL_PAULI:
                tab.apply_pauli(slots[op.qubits[0]], op.pauli)
        if check and not tab.is_valid():
            raise AssertionError("tableau lost its symplectic structure")
    return RunResult(circuit, outcomes, random, tracked, tab, sm)


def readout_bits(result: RunResult, basis: str, rng=None) -> np.ndarray:
    """Destructive single-qubit readout of the output block, as an ``n1 x n2`` array."""
    blk = result.circuit.blocks[result.circuit.output]
    tab = result.tableau.copy()
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    bits = np.zeros((blk.n1, blk.n2), dtype=np.uint8)
    for k, q in enumerate(blk.qubits):
        s = result.slots.slots[q]
        if basis == "Z":
            bits[k // blk.n2, k % blk.n2] = tab.measure_z(s, rng)[0]
        else:
            bits[k // blk.n2, k % blk.n2] = tab.measure_x(s, rng)[0]
    return bits


def ideal_readout(result: RunResult, basis: str, rng=None) -> int:
    """Logical bit of the output block in ``basis`` ("Z": Z_L, "X": X_L).

    Reading every qubit in the logical's basis is equivalent to a noiseless
    EC round followed by a logical measurement: column parities (Z basis) or
    row parities (X basis) are the values of the dressed logicals, the
    differences between neighbours are the stabilizer bits, and the same
    repetition decoder used in the circuits picks the correction. Tracked
    logical Paulis that anticommute with the measured logical are folded in.
    """
    basis = basis.upper()
    blk = result.circuit.blocks[result.circuit.output]
    build_code(blk.n1, blk.n2)
    bits = readout_bits(result, basis, rng)
    if basis == "Z":
        lines = np.bitwise_xor.reduce(bits, axis=0)  # Z(*,j) per column
    elif basis == "X":
        lines = np.bitwise_xor.reduce(bits, axis=1)  # X(i,*) per row
    else:
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    syndrome = tuple(int(lines[k] ^ lines[k + 1]) for k in range(len(lines) - 1))
    flipped = decode_sets(len(lines), syndrome)
    value = int(lines[0]) ^ int(1 in flipped)
    tracked = result.tracked.get(blk.name, {"X": 0, "Z": 0})
    value ^= tracked["X"] if basis == "Z" else tracked["Z"]
    return value
