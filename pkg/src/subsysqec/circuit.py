"""Fault-location circuit representation with classical feedback.

A :class:`Circuit` is a list of timesteps. Each timestep holds quantum
locations acting on disjoint qubits, followed by classical operations
(guarded Pauli corrections and tracked logical updates) that take effect at
the end of the step and never carry noise.
"""
from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

__all__ = [
    "Circuit",
    "CircuitBuilder",
    "ClassicalExpr",
    "Const",
    "DataBlock",
    "Location",
    "Lookup",
    "Majority",
    "Parity",
    "QubitInfo",
    "TrackedLogical",
    "MalformedCircuit",
    "evaluate",
]

PREP0 = "Prep0"
PREP_PLUS = "PrepPlus"
GATE_H = "GateH"
GATE_X = "GateX"
GATE_Z = "GateZ"
GATE_CNOT = "GateCNOT"
MEAS_Z = "MeasZ"
MEAS_X = "MeasX"
IDLE = "Idle"
CLASSICAL_PAULI = "ClassicalPauli"
TRACK = "TrackLogical"

QUANTUM_KINDS = (PREP0, PREP_PLUS, GATE_H, GATE_X, GATE_Z, GATE_CNOT, MEAS_Z, MEAS_X, IDLE)
PREP_KINDS = (PREP0, PREP_PLUS)
MEAS_KINDS = (MEAS_Z, MEAS_X)


class MalformedCircuit(ValueError):
    pass


# --- classical expressions -------------------------------------------------

Term = Union[int, "ClassicalExpr"]


@dataclass(frozen=True)
class Const:
    value: int

    def registers(self) -> set[int]:
        return set()

    def render(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Parity:
    terms: tuple

    def __init__(self, terms: Iterable[Term]):
        object.__setattr__(self, "terms", tuple(terms))

    def registers(self) -> set[int]:
        return _term_registers(self.terms)

    def render(self) -> str:
        return "par(" + ",".join(_render(t) for t in self.terms) + ")"


@dataclass(frozen=True)
class Majority:
    terms: tuple

    def __init__(self, terms: Iterable[Term]):
        terms = tuple(terms)
        if len(terms) % 2 == 0:
            raise ValueError("majority needs an odd number of terms")
        object.__setattr__(self, "terms", terms)

    def registers(self) -> set[int]:
        return _term_registers(self.terms)

    def render(self) -> str:
        return "maj(" + ",".join(_render(t) for t in self.terms) + ")"


@dataclass(frozen=True)
class Lookup:
    """Truth table over the term bits; term ``k`` is bit ``k`` of the index."""

    terms: tuple
    table: tuple

    def __init__(self, terms: Iterable[Term], table: Iterable[int]):
        terms, table = tuple(terms), tuple(int(v) & 1 for v in table)
        if len(table) != 1 << len(terms):
            raise ValueError("lookup table must have 2**len(terms) entries")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "table", table)

    def registers(self) -> set[int]:
        return _term_registers(self.terms)

    def render(self) -> str:
        bits = "".join(map(str, self.table))
        return "lut[" + bits + "](" + ",".join(_render(t) for t in self.terms) + ")"


ClassicalExpr = Union[Const, Parity, Majority, Lookup]


def _term_registers(terms) -> set[int]:
    regs: set[int] = set()
    for t in terms:
        if isinstance(t, int):
            regs.add(t)
        else:
            regs |= t.registers()
    return regs


def _render(t: Term) -> str:
    return f"m{t}" if isinstance(t, int) else t.render()


def evaluate(expr: Term, outcomes, memo: dict | None = None) -> int:
    """Value of ``expr`` given an indexable of register bits.

    ``memo`` caches sub-expression values by object identity; pass the same
    dict across calls only while the registers read stay unchanged.
    """
    if isinstance(expr, int):
        v = outcomes[expr]
        if v is None or v < 0:
            raise MalformedCircuit(f"register m{expr} read before it was written")
        return int(v)
    if memo is not None:
        hit = memo.get(id(expr))
        if hit is not None:
            return hit
    if isinstance(expr, Const):
        val = expr.value & 1
    elif isinstance(expr, Parity):
        val = 0
        for t in expr.terms:
            val ^= evaluate(t, outcomes, memo)
    elif isinstance(expr, Majority):
        ones = sum(evaluate(t, outcomes, memo) for t in expr.terms)
        val = int(2 * ones > len(expr.terms))
    elif isinstance(expr, Lookup):
        idx = 0
        for k, t in enumerate(expr.terms):
            idx |= evaluate(t, outcomes, memo) << k
        val = expr.table[idx]
    else:
        raise TypeError(f"not a classical expression: {expr!r}")
    if memo is not None:
        memo[id(expr)] = val
    return val


# --- locations and circuits -------------------------------------------------


@dataclass(frozen=True)
class Location:
    kind: str
    qubits: tuple[int, ...]
    register: int | None = None
    pauli: str | None = None
    guard: ClassicalExpr | None = None
    noisy: bool = True

    def render(self) -> str:
        parts = [self.kind, ",".join(map(str, self.qubits)) or "-"]
        if self.register is not None:
            parts.append(f"m{self.register}")
        if self.pauli is not None:
            parts.append(self.pauli)
        if self.guard is not None:
            parts.append("if " + self.guard.render())
        if not self.noisy and self.kind in QUANTUM_KINDS:
            parts.append("noiseless")
        return " ".join(parts)


@dataclass(frozen=True)
class TrackedLogical:
    """Classically tracked logical Pauli on a data block, applied when ``guard`` is 1."""

    block: str
    pauli: str
    guard: ClassicalExpr

    def render(self) -> str:
        return f"{TRACK} {self.block} {self.pauli} if {self.guard.render()}"


@dataclass(frozen=True)
class QubitInfo:
    role: str  # "data" or "ancilla"
    block: str
    label: str


@dataclass(frozen=True)
class DataBlock:
    name: str
    n1: int
    n2: int
    qubits: tuple[int, ...]  # grid order: qubits[(i-1)*n2 + (j-1)] is site (i, j)

    def q(self, i: int, j: int) -> int:
        if not (1 <= i <= self.n1 and 1 <= j <= self.n2):
            raise IndexError(f"site ({i},{j}) outside block {self.name}")
        return self.qubits[(i - 1) * self.n2 + (j - 1)]


@dataclass(frozen=True)
class Step:
    locations: tuple[Location, ...]
    classical: tuple[Location | TrackedLogical, ...] = ()


@dataclass(frozen=True, eq=False)
class Circuit:
    name: str
    qubits: tuple[QubitInfo, ...]
    steps: tuple[Step, ...]
    num_registers: int
    register_labels: tuple[str, ...]
    blocks: dict = field(default_factory=dict)
    output: str | None = None
    meta: dict = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def locations(self) -> list[tuple[int, Location]]:
        """Noisy-capable quantum locations as ``(timestep, location)`` in time order."""
        return [(t, loc) for t, step in enumerate(self.steps) for loc in step.locations]

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for step in self.steps:
            for loc in step.locations:
                out[loc.kind] = out.get(loc.kind, 0) + 1
            for op in step.classical:
                kind = op.kind if isinstance(op, Location) else TRACK
                out[kind] = out.get(kind, 0) + 1
        return out

    def noisy_location_count(self) -> int:
        return sum(loc.noisy for step in self.steps for loc in step.locations)

    def qubits_with_role(self, role: str) -> list[int]:
        return [q for q, info in enumerate(self.qubits) if info.role == role]

    def to_lines(self) -> list[str]:
        lines = [f"# circuit {self.name}"]
        for q, info in enumerate(self.qubits):
            lines.append(f"# qubit {q} {info.role} {info.block} {info.label}")
        for name, blk in self.blocks.items():
            lines.append(f"# block {name} C({blk.n1},{blk.n2}) " + ",".join(map(str, blk.qubits)))
        if self.output:
            lines.append(f"# output {self.output}")
        for t, step in enumerate(self.steps):
            for loc in step.locations:
                lines.append(f"{t} {loc.render()}")
            for op in step.classical:
                lines.append(f"{t} {op.render()}")
        return lines

    def to_text(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    def to_json(self) -> str:
        steps = []
        for t, step in enumerate(self.steps):
            for loc in step.locations:
                steps.append(
                    {
                        "t": t,
                        "kind": loc.kind,
                        "qubits": list(loc.qubits),
                        "register": loc.register,
                        "noisy": loc.noisy,
                    }
                )
            for op in step.classical:
                if isinstance(op, TrackedLogical):
                    steps.append({"t": t, "kind": TRACK, "block": op.block, "pauli": op.pauli,
                                  "guard": op.guard.render()})
                else:
                    steps.append({"t": t, "kind": op.kind, "qubits": list(op.qubits),
                                  "pauli": op.pauli, "guard": op.guard.render()})
        doc = {
            "name": self.name,
            "qubits": [[i.role, i.block, i.label] for i in self.qubits],
            "blocks": {k: {"n1": b.n1, "n2": b.n2, "qubits": list(b.qubits)}
                       for k, b in self.blocks.items()},
            "output": self.output,
            "registers": list(self.register_labels),
            "locations": steps,
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def validate(self) -> None:
        written = set()
        for t, step in enumerate(self.steps):
            seen: set[int] = set()
            for loc in step.locations:
                if loc.kind == GATE_CNOT and loc.qubits[0] == loc.qubits[1]:
                    raise MalformedCircuit(f"CNOT with equal control and target at t={t}")
                for q in loc.qubits:
                    if q in seen:
                        raise MalformedCircuit(f"qubit {q} used twice in timestep {t}")
                    seen.add(q)
                if loc.register is not None:
                    if loc.register in written:
                        raise MalformedCircuit(f"register m{loc.register} written twice")
                    written.add(loc.register)
            for op in step.classical:
                missing = op.guard.registers() - written
                if missing:
                    raise MalformedCircuit(f"guard at t={t} reads unwritten registers {sorted(missing)}")


# --- builder ----------------------------------------------------------------


class CircuitBuilder:
    """Schedules operations as soon as their qubits are free.

    ``barrier()`` pins everything issued afterwards to start no earlier than
    the current end of the circuit; fresh ancillas are therefore prepared at
    the start of the gadget that uses them, as drawn in the figures.
    """

    def __init__(self, name: str = "circuit"):
        self.name = name
        self.qubits: list[QubitInfo] = []
        self._ops: dict[int, list[Location]] = {}
        self._classical: dict[int, list] = {}
        self._free: list[int] = []  # next free timestep per qubit
        self._first: list[int | None] = []
        self._measured_at: dict[int, int] = {}
        self._reg_time: list[int] = []
        self.register_labels: list[str] = []
        self.blocks: dict[str, DataBlock] = {}
        self.output: str | None = None
        self.meta: dict = {}
        self._floor = 0
        self._noisy = True
        self._alive_from_start: set[int] = set()

    # qubits and blocks

    def new_qubit(self, role: str, block: str, label: str) -> int:
        self.qubits.append(QubitInfo(role, block, label))
        self._free.append(self._floor)
        self._first.append(None)
        return len(self.qubits) - 1

    def new_block(self, name: str, n1: int, n2: int, alive: bool = True) -> DataBlock:
        """Fresh data block; ``alive`` blocks exist (and idle) from timestep 0."""
        qs = []
        for i in range(1, n1 + 1):
            for j in range(1, n2 + 1):
                q = self.new_qubit("data", name, f"({i},{j})")
                if alive:
                    self._alive_from_start.add(q)
                qs.append(q)
        blk = DataBlock(name, n1, n2, tuple(qs))
        self.blocks[name] = blk
        return blk

    def set_block(self, blk: DataBlock) -> None:
        self.blocks[blk.name] = blk

    @contextmanager
    def noiseless(self):
        prev, self._noisy = self._noisy, False
        try:
            yield
        finally:
            self._noisy = prev

    @property
    def now(self) -> int:
        return max([self._floor, *self._free]) if self._free else self._floor

    def barrier(self) -> None:
        self._floor = self.now

    # quantum operations

    def _place(self, loc: Location, earliest: int = 0) -> int:
        t = max([self._floor, earliest] + [self._free[q] for q in loc.qubits])
        for q in loc.qubits:
            if q in self._measured_at:
                raise MalformedCircuit(f"qubit {q} used after measurement")
            self._free[q] = t + 1
            if self._first[q] is None:
                self._first[q] = t
        self._ops.setdefault(t, []).append(loc)
        return t

    def _loc(self, kind, qubits, **kw) -> Location:
        return Location(kind, tuple(qubits), noisy=self._noisy, **kw)

    def prep0(self, q: int) -> None:
        self._place(self._loc(PREP0, [q]))

    def prep_plus(self, q: int) -> None:
        self._place(self._loc(PREP_PLUS, [q]))

    def h(self, q: int) -> None:
        self._place(self._loc(GATE_H, [q]))

    def x(self, q: int) -> None:
        self._place(self._loc(GATE_X, [q]))

    def z(self, q: int) -> None:
        self._place(self._loc(GATE_Z, [q]))

    def cnot(self, control: int, target: int) -> None:
        if control == target:
            raise MalformedCircuit("CNOT control equals target")
        self._place(self._loc(GATE_CNOT, [control, target]))

    def idle(self, qubits: Sequence[int]) -> None:
        """One explicit memory timestep on ``qubits``, aligned across them."""
        t = max([self._floor] + [self._free[q] for q in qubits])
        for q in qubits:
            self._place(self._loc(IDLE, [q]), earliest=t)

    def _measure(self, kind: str, q: int, label: str) -> int:
        reg = len(self._reg_time)
        t = self._place(self._loc(kind, [q], register=reg))
        self._measured_at[q] = t
        self._reg_time.append(t)
        self.register_labels.append(label)
        return reg

    def measure_z(self, q: int, label: str = "") -> int:
        return self._measure(MEAS_Z, q, label)

    def measure_x(self, q: int, label: str = "") -> int:
        return self._measure(MEAS_X, q, label)

    # classical operations

    def _guard_time(self, guard: ClassicalExpr) -> int:
        regs = guard.registers()
        return max((self._reg_time[r] for r in regs), default=0)

    def classical_pauli(self, pauli: str, q: int, guard: ClassicalExpr) -> None:
        if pauli not in ("X", "Z"):
            raise ValueError("classical Pauli must be X or Z")
        # applied at the end of the step that produced its last input, or
        # after the qubit's latest operation, whichever is later
        t = max(self._guard_time(guard), self._free[q] - 1, 0)
        self._classical.setdefault(t, []).append(
            Location(CLASSICAL_PAULI, (q,), pauli=pauli, guard=guard, noisy=False)
        )
        self._free[q] = max(self._free[q], t + 1)

    def track_logical(self, block: str, pauli: str, guard: ClassicalExpr) -> None:
        t = self._guard_time(guard)
        self._classical.setdefault(t, []).append(TrackedLogical(block, pauli, guard))

    # finalisation

    def build(self) -> Circuit:
        end = self.now
        steps_ops = {t: list(v) for t, v in self._ops.items()}
        busy_at: dict[int, set[int]] = {}
        for t, locs in steps_ops.items():
            for loc in locs:
                for q in loc.qubits:
                    busy_at.setdefault(q, set()).add(t)
        for q in range(len(self.qubits)):
            busy = busy_at.get(q, set())
            if self._first[q] is None and q not in self._alive_from_start:
                continue
            start = 0 if q in self._alive_from_start else self._first[q]
            stop = self._measured_at.get(q, end - 1)
            for t in range(start, stop + 1):
                if t not in busy:
                    steps_ops.setdefault(t, []).append(Location(IDLE, (q,), noisy=self._idle_noisy(t, q)))
        n_steps = max([end] + [t + 1 for t in self._classical])
        steps = []
        for t in range(n_steps):
            locs = sorted(steps_ops.get(t, []), key=lambda l: (l.qubits, l.kind))
            steps.append(Step(tuple(locs), tuple(self._classical.get(t, ()))))
        circ = Circuit(
            self.name,
            tuple(self.qubits),
            tuple(steps),
            len(self._reg_time),
            tuple(self.register_labels),
            dict(self.blocks),
            self.output,
            dict(self.meta),
        )
        circ.validate()
        return circ

    def _idle_noisy(self, t: int, q: int) -> bool:
        # idles inherit the noise flag of whatever else happens in that step
        locs = self._ops.get(t, [])
        return any(l.noisy for l in locs) if locs else True
