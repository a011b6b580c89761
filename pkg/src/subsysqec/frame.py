"""Pauli-frame sampling of circuits against a noiseless reference run.

A circuit is compiled once into a flat integer program over tableau slots.
Each trial tracks only the Pauli frame (the difference between the noisy run
and one fixed noiseless reference run of the tableau engine):

* preparations randomize the frame by the prepared state's own stabilizer,
  which reproduces the coin-flip statistics of gauge measurements;
* a measured bit is the reference bit XOR the frame's anticommutation;
* a classical expression is evaluated on the actual bits, and a guarded
  Pauli toggles the frame when its value differs from the reference.

The trial loop runs in the compiled extension when it is importable and
falls back to a numpy implementation vectorized across trials. Both draw
from the same counter-based splitmix64 streams (one stream per trial index),
so they return identical samples.
"""
from __future__ import annotations

from dataclasses import dataclass
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
    QUANTUM_KINDS,
    Circuit,
    Const,
    Lookup,
    Majority,
    Parity,
    TrackedLogical,
    evaluate,
)
from .engine import ideal_readout, run, slot_map
from .noise import FaultAssignment, NoiseModel

from ._ext import kernels as _kernel

__all__ = [
    "CompiledCircuit",
    "FrameSamples",
    "compile_circuit",
    "have_extension",
    "sample",
]

OP_PREP0, OP_PREPP, OP_H, OP_CNOT, OP_MEASZ, OP_MEASX, OP_NOISE = 1, 2, 3, 4, 5, 6, 7
OP_PAR, OP_MAJ, OP_LUT, OP_CX, OP_CZ, OP_TRACK, OP_CONST = 8, 9, 10, 11, 12, 13, 14

KIND_CLASSES = {kind: i for i, kind in enumerate(QUANTUM_KINDS)}

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
TRIAL_MULT = np.uint64(0xD1B54A32D192ED03)


def have_extension() -> bool:
    return _kernel is not None


@dataclass(frozen=True, eq=False)
class CompiledCircuit:
    circuit: Circuit
    program: np.ndarray  # int32
    lut: np.ndarray  # uint8
    ref_meas: np.ndarray  # uint8 reference outcome per register
    num_slots: int
    num_temps: int
    num_noise: int
    noise_slot_of_location: dict  # location index -> first noise slot id
    noise_classes: np.ndarray  # kind class per noise slot (int32)
    output_slots: np.ndarray  # int32, output block in grid order
    n1: int
    n2: int
    probe: str | None
    ref_logical: int | None


def _kernel_rng_state(seed: int, trials: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        s = _mix(np.full(trials.shape, np.uint64(seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64))
        return _mix(s ^ (trials.astype(np.uint64) * TRIAL_MULT + np.uint64(1)))


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * M1
        z = (z ^ (z >> np.uint64(27))) * M2
        return z ^ (z >> np.uint64(31))


class _Compiler:
    def __init__(self, circuit: Circuit, ref):
        self.circuit = circuit
        self.ref = ref
        self.prog: list[int] = []
        self.lut: list[int] = []
        self.temps: dict = {}
        self.ref_temps: list[int] = list(int(v) for v in ref.outcomes.clip(0))
        self.num_temps = circuit.num_registers

    def temp(self, expr) -> int:
        if isinstance(expr, int):
            return expr
        if expr in self.temps:
            return self.temps[expr]
        if isinstance(expr, Const):
            dst = self._new_temp(expr)
            self.prog += [OP_CONST, dst, expr.value & 1]
            return dst
        args = [self.temp(t) for t in expr.terms]
        dst = self._new_temp(expr)
        if isinstance(expr, Parity):
            self.prog += [OP_PAR, dst, len(args), *args]
        elif isinstance(expr, Majority):
            self.prog += [OP_MAJ, dst, len(args), *args]
        elif isinstance(expr, Lookup):
            offset = len(self.lut)
            self.lut.extend(expr.table)
            self.prog += [OP_LUT, dst, len(args), *args, offset]
        else:
            raise TypeError(f"cannot compile {expr!r}")
        return dst

    def _new_temp(self, expr) -> int:
        dst = self.num_temps
        self.num_temps += 1
        self.temps[expr] = dst
        self.ref_temps.append(evaluate(expr, self.ref.outcomes))
        return dst


def compile_circuit(circuit: Circuit, ref_seed: int = 0) -> CompiledCircuit:
    return _compile_cached(circuit, ref_seed)


@lru_cache(maxsize=32)
def _compile_cached(circuit: Circuit, ref_seed: int) -> CompiledCircuit:
    ref = run(circuit, rng=ref_seed)
    slots = slot_map(circuit).slots
    comp = _Compiler(circuit, ref)
    prog = comp.prog
    noise_first: dict[int, int] = {}
    noise_classes: list[int] = []
    loc_index = 0

    def noise(loc, idx):
        noise_first[idx] = len(noise_classes)
        for q in loc.qubits:
            prog.extend([OP_NOISE, slots[q], KIND_CLASSES[loc.kind]])
            noise_classes.append(KIND_CLASSES[loc.kind])

    out_block = circuit.blocks[circuit.output] if circuit.output else None
    for step in circuit.steps:
        for loc in step.locations:
            kind = loc.kind
            s = [slots[q] for q in loc.qubits]
            if kind in (MEAS_Z, MEAS_X):
                if loc.noisy:
                    noise(loc, loc_index)
                prog.extend([OP_MEASZ if kind == MEAS_Z else OP_MEASX, s[0], loc.register])
            else:
                if kind == PREP0:
                    prog.extend([OP_PREP0, s[0]])
                elif kind == PREP_PLUS:
                    prog.extend([OP_PREPP, s[0]])
                elif kind == GATE_H:
                    prog.extend([OP_H, s[0]])
                elif kind == GATE_CNOT:
                    prog.extend([OP_CNOT, s[0], s[1]])
                elif kind not in (GATE_X, GATE_Z, IDLE):
                    raise ValueError(f"cannot compile location kind {kind}")
                if loc.noisy:
                    noise(loc, loc_index)
            loc_index += 1
        for op in step.classical:
            g = comp.temp(op.guard)
            refval = comp.ref_temps[g]
            if isinstance(op, TrackedLogical):
                if out_block is not None and op.block == out_block.name:
                    prog.extend([OP_TRACK, 0 if op.pauli == "X" else 1, g, refval])
            elif op.kind == CLASSICAL_PAULI:
                prog.extend([OP_CX if op.pauli == "X" else OP_CZ, slots[op.qubits[0]], g, refval])
    prog.append(0)

    probe = circuit.meta.get("probe")
    ref_logical = None
    if isinstance(probe, str) and out_block is not None:
        ref_logical = ideal_readout(ref, probe, rng=ref_seed)
    return CompiledCircuit(
        circuit=circuit,
        program=np.asarray(prog, dtype=np.int32),
        lut=np.asarray(comp.lut or [0], dtype=np.uint8),
        ref_meas=np.asarray(ref.outcomes.clip(0), dtype=np.uint8),
        num_slots=max(slot_map(circuit).width, 1),
        num_temps=comp.num_temps,
        num_noise=len(noise_classes),
        noise_slot_of_location=noise_first,
        noise_classes=np.asarray(noise_classes, dtype=np.int32),
        output_slots=np.asarray([slots[q] for q in out_block.qubits] if out_block else [], dtype=np.int32),
        n1=out_block.n1 if out_block else 0,
        n2=out_block.n2 if out_block else 0,
        probe=probe if isinstance(probe, str) else None,
        ref_logical=ref_logical,
    )


def thresholds(model: NoiseModel | None) -> np.ndarray:
    """Per kind class ``(z, x)`` thresholds on 32-bit uniforms."""
    thr = np.zeros((len(QUANTUM_KINDS), 2), dtype=np.uint64)
    if model is None:
        return thr
    for kind, cls in KIND_CLASSES.items():
        p_z, p_x = model.rates(kind)
        thr[cls] = (round(p_z * 2**32), round(p_x * 2**32))
    return thr


@dataclass
class FrameSamples:
    """Final frames of the output block and tracked-logical toggles per trial."""

    x: np.ndarray  # (trials, n_out) uint8
    z: np.ndarray
    tracked: np.ndarray  # (trials, 2) uint8: [X_L toggle, Z_L toggle]
    n1: int
    n2: int

    def logical_flips(self) -> tuple[np.ndarray, np.ndarray]:
        """``(x_flip, z_flip)`` per trial after ideal decoding.

        ``x_flip`` means the Z_L readout is wrong (a logical X acted), and
        ``z_flip`` that the X_L readout is wrong. Ideal decoding of a
        repetition structure fails exactly when a majority of column (row)
        parities of the residual frame are odd.
        """
        t = self.x.shape[0]
        xs = self.x.reshape(t, self.n1, self.n2)
        zs = self.z.reshape(t, self.n1, self.n2)
        col_par = np.bitwise_xor.reduce(xs, axis=1)
        row_par = np.bitwise_xor.reduce(zs, axis=2)
        x_flip = (2 * col_par.sum(axis=1) > self.n2).astype(np.uint8) ^ self.tracked[:, 0]
        z_flip = (2 * row_par.sum(axis=1) > self.n1).astype(np.uint8) ^ self.tracked[:, 1]
        return x_flip, z_flip


def _faults_csr(comp: CompiledCircuit, faults: list[FaultAssignment] | None, trials: int):
    if faults is None:
        return None
    if len(faults) != trials:
        raise ValueError("one fault assignment per trial is required")
    ptr = np.zeros(trials + 1, dtype=np.int64)
    ids, codes = [], []
    for k, fa in enumerate(faults):
        entries = {}
        for f in fa.faults:
            base = comp.noise_slot_of_location.get(f.location)
            if base is None:
                raise ValueError(f"location {f.location} carries no noise")
            for off, p in enumerate(f.paulis):
                code = {"I": 0, "X": 1, "Z": 2, "Y": 3}[p]
                if code:
                    entries[base + off] = entries.get(base + off, 0) ^ code
        for sid in sorted(entries):
            if entries[sid]:
                ids.append(sid)
                codes.append(entries[sid])
        ptr[k + 1] = len(ids)
    return ptr, np.asarray(ids, dtype=np.int64), np.asarray(codes, dtype=np.uint8)


def sample(comp: CompiledCircuit, model: NoiseModel | None, trials: int, seed: int,
           trial_start: int = 0, faults: list[FaultAssignment] | None = None,
           backend: str = "auto", fault_csr: tuple | None = None) -> FrameSamples:
    """Run ``trials`` frame trials with indices ``trial_start ...``.

    Trial ``k`` always uses the random stream derived from ``(seed, k)``, so
    any split of a trial range over workers gives the same samples.
    Injected faults come either as one :class:`FaultAssignment` per trial or
    as ``fault_csr = (ptr, noise_ids, codes)`` over noise-site ids, with
    ``codes`` bit 0 for X and bit 1 for Z and ids sorted within each trial.
    """
    thr = thresholds(model)
    csr = _faults_csr(comp, faults, trials) if fault_csr is None else fault_csr
    if backend == "auto":
        backend = "ext" if _kernel is not None else "numpy"
    if backend == "ext":
        if _kernel is None:
            raise RuntimeError("compiled frame kernel is not available")
        fn = _kernel.run_trials
    elif backend == "numpy":
        fn = _run_trials_numpy
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if csr is None:
        csr = (np.zeros(trials + 1, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.uint8))
    x, z, tr = fn(comp.program, comp.lut, comp.ref_meas, thr, comp.num_slots, comp.num_temps,
                  comp.output_slots, np.uint64(seed & 0xFFFFFFFFFFFFFFFF), int(trial_start), int(trials),
                  csr[0], csr[1], csr[2])
    return FrameSamples(np.asarray(x), np.asarray(z), np.asarray(tr), comp.n1, comp.n2)


def _run_trials_numpy(prog, lut, ref_meas, thr, num_slots, num_temps, out_slots, seed,
                      trial_start, trials, fptr, fids, fcodes):
    """Reference implementation, vectorized across trials."""
    B = trials
    x = np.zeros((num_slots, B), dtype=np.uint8)
    z = np.zeros((num_slots, B), dtype=np.uint8)
    T = np.zeros((num_temps, B), dtype=np.uint8)
    tracked = np.zeros((2, B), dtype=np.uint8)
    idx = np.arange(trial_start, trial_start + B, dtype=np.uint64)
    state = _kernel_rng_state(int(seed), idx)
    lo_mask = np.uint64(0xFFFFFFFF)
    shift32 = np.uint64(32)
    shift63 = np.uint64(63)

    # explicit faults grouped by noise slot id
    by_slot: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    if fids.size:
        owners = np.repeat(np.arange(B), np.diff(fptr))
        order = np.argsort(fids, kind="stable")
        sids, owners, codes = fids[order], owners[order], fcodes[order]
        bounds = np.flatnonzero(np.diff(sids)) + 1
        for chunk_s, chunk_o, chunk_c in zip(np.split(sids, bounds), np.split(owners, bounds),
                                             np.split(codes, bounds)):
            by_slot[int(chunk_s[0])] = (chunk_o, chunk_c)

    def draw():
        nonlocal state
        with np.errstate(over="ignore"):
            state = state + GOLDEN
        return _mix(state)

    pc = 0
    noise_id = 0
    n = len(prog)
    while pc < n:
        op = prog[pc]
        if op == 0:
            break
        if op == OP_PREP0:
            s = prog[pc + 1]
            x[s] = 0
            z[s] = (draw() >> shift63).astype(np.uint8)
            pc += 2
        elif op == OP_PREPP:
            s = prog[pc + 1]
            z[s] = 0
            x[s] = (draw() >> shift63).astype(np.uint8)
            pc += 2
        elif op == OP_H:
            s = prog[pc + 1]
            x[s], z[s] = z[s].copy(), x[s].copy()
            pc += 2
        elif op == OP_CNOT:
            c, t = prog[pc + 1], prog[pc + 2]
            x[t] ^= x[c]
            z[c] ^= z[t]
            pc += 3
        elif op == OP_MEASZ:
            s, r = prog[pc + 1], prog[pc + 2]
            T[r] = ref_meas[r] ^ x[s]
            pc += 3
        elif op == OP_MEASX:
            s, r = prog[pc + 1], prog[pc + 2]
            T[r] = ref_meas[r] ^ z[s]
            pc += 3
        elif op == OP_NOISE:
            s, cls = prog[pc + 1], prog[pc + 2]
            tz, tx = thr[cls]
            if tz or tx:
                u = draw()
                if tz:
                    z[s] ^= ((u >> shift32) < tz).astype(np.uint8)
                if tx:
                    x[s] ^= ((u & lo_mask) < tx).astype(np.uint8)
            hit = by_slot.get(noise_id)
            if hit is not None:
                owners, codes = hit
                np.bitwise_xor.at(x[s], owners, codes & 1)
                np.bitwise_xor.at(z[s], owners, codes >> 1)
            noise_id += 1
            pc += 3
        elif op == OP_PAR:
            dst, k = prog[pc + 1], prog[pc + 2]
            acc = T[prog[pc + 3]].copy()
            for a in prog[pc + 4 : pc + 3 + k]:
                acc ^= T[a]
            T[dst] = acc
            pc += 3 + k
        elif op == OP_MAJ:
            dst, k = prog[pc + 1], prog[pc + 2]
            total = T[prog[pc + 3 : pc + 3 + k]].sum(axis=0, dtype=np.int32)
            T[dst] = (2 * total > k).astype(np.uint8)
            pc += 3 + k
        elif op == OP_LUT:
            dst, k = prog[pc + 1], prog[pc + 2]
            index = np.zeros(B, dtype=np.int64)
            for j, a in enumerate(prog[pc + 3 : pc + 3 + k]):
                index |= T[a].astype(np.int64) << j
            offset = prog[pc + 3 + k]
            T[dst] = lut[offset + index]
            pc += 4 + k
        elif op == OP_CONST:
            T[prog[pc + 1]] = prog[pc + 2]
            pc += 3
        elif op in (OP_CX, OP_CZ):
            s, g, refval = prog[pc + 1], prog[pc + 2], prog[pc + 3]
            toggle = T[g] ^ np.uint8(refval)
            if op == OP_CX:
                x[s] ^= toggle
            else:
                z[s] ^= toggle
            pc += 4
        elif op == OP_TRACK:
            which, g, refval = prog[pc + 1], prog[pc + 2], prog[pc + 3]
            tracked[which] ^= T[g] ^ np.uint8(refval)
            pc += 4
        else:
            raise ValueError(f"bad opcode {op} at {pc}")
    return x[out_slots].T.copy(), z[out_slots].T.copy(), tracked.T.copy()
