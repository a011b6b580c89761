"""Builders for syndrome extraction, conversion, encoding and memory circuits.

Every builder comes in two flavours: an ``add_*`` function that appends to a
:class:`CircuitBuilder` acting on a :class:`DataBlock`, and a convenience
function returning a finished :class:`Circuit`.

Gate order inside each gadget follows the figures: the Z-syndrome gadget for
column ``j`` uses ``n1`` ancillas measuring the cycle of X pairs
``(n1-1,n1), ..., (1,2)`` and finally the redundant ``(1,n1)``; the
X-syndrome gadget for row ``i`` does the same for Z pairs along the row.
"""
from __future__ import annotations

from .circuit import Circuit, CircuitBuilder, DataBlock, Lookup, Majority, Parity
from .code import SubsystemCode, UnsupportedGeometry, build_code
from .decoder import decoder_table

__all__ = [
    "add_convert_down",
    "add_convert_up",
    "add_ec_round",
    "add_encode",
    "add_transversal",
    "add_x_extraction",
    "add_z_extraction",
    "chain_circuit",
    "convert_down",
    "convert_down_exrec",
    "convert_up",
    "convert_up_exrec",
    "ec_round",
    "encode_logical",
    "memory_exrec",
    "transversal",
    "x_syndrome_extraction",
    "z_syndrome_extraction",
]

DEFAULT_REPS = 3


def _check_code(code: SubsystemCode | DataBlock) -> None:
    build_code(code.n1, code.n2)  # raises UnsupportedGeometry


# --- gadgets ------------------------------------------------------------------


def _pair_cycle(length: int) -> list[tuple[int, int]]:
    """Pairs in the order their CNOTs are issued, with the redundant pair last."""
    pairs = [(a, a + 1) for a in range(length - 1, 0, -1)]
    return pairs + [(1, length)]


def add_z_extraction(b: CircuitBuilder, blk: DataBlock, j: int, tag: str = "") -> dict:
    """X-pair parities down column ``j``; returns ``{a: register}`` with ``a = 0`` the redundant pair.

    Pair ``a`` (``1 <= a < n1``) is ``X(a,j)X(a+1,j)``; ancillas control CNOTs
    onto the data, so each is prepared in |+> via H and rotated back before a
    Z measurement.
    """
    if not 1 <= j <= blk.n2:
        raise IndexError(f"column {j} outside 1..{blk.n2}")
    pairs = _pair_cycle(blk.n1)
    ancillas = [b.new_qubit("ancilla", "A", f"zx{tag}c{j}p{lo}{hi}") for lo, hi in pairs]
    for a in ancillas:
        b.prep0(a)
    for a in ancillas:
        b.h(a)
    for a, (lo, hi) in zip(ancillas, pairs):
        first, second = (hi, lo) if (lo, hi) != (1, blk.n1) else (lo, hi)
        b.cnot(a, blk.q(first, j))
        b.cnot(a, blk.q(second, j))
    regs = {}
    for a, (lo, hi) in zip(ancillas, pairs):
        b.h(a)
        key = 0 if (lo, hi) == (1, blk.n1) else lo
        regs[key] = b.measure_z(a, f"{tag}X({lo},{j})X({hi},{j})")
    return regs


def add_x_extraction(b: CircuitBuilder, blk: DataBlock, i: int, tag: str = "") -> dict:
    """Z-pair parities along row ``i``; returns ``{a: register}`` with ``a = 0`` the redundant pair.

    Data qubits control CNOTs onto ancillas prepared in |0>.
    """
    if not 1 <= i <= blk.n1:
        raise IndexError(f"row {i} outside 1..{blk.n1}")
    pairs = _pair_cycle(blk.n2)
    ancillas = [b.new_qubit("ancilla", "A", f"xz{tag}r{i}p{lo}{hi}") for lo, hi in pairs]
    for a in ancillas:
        b.prep0(a)
    for a, (lo, hi) in zip(ancillas, pairs):
        first, second = (hi, lo) if (lo, hi) != (1, blk.n2) else (lo, hi)
        b.cnot(blk.q(i, first), a)
        b.cnot(blk.q(i, second), a)
    regs = {}
    for a, (lo, hi) in zip(ancillas, pairs):
        key = 0 if (lo, hi) == (1, blk.n2) else lo
        regs[key] = b.measure_z(a, f"{tag}Z({i},{lo})Z({i},{hi})")
    return regs


VOTES = ("agree", "majority")


def _syndrome_bits(rounds: list[dict], length: int, vote: str = "agree") -> list:
    """One expression per stabilizer bit combining the rounds.

    ``majority`` votes each bit separately. ``agree`` takes the whole
    syndrome of the first pair of consecutive rounds that agree, and the
    last round when none do. Per-bit majority is fooled by a data fault in
    the middle of a round (clean, partial, full); the agreement rule is not.
    """
    if vote not in VOTES:
        raise ValueError(f"vote must be one of {VOTES}, got {vote!r}")
    per_round = [[Parity([cells[c][a] for c in sorted(cells)]) for a in range(1, length)]
                 for cells in rounds]
    if len(per_round) == 1:
        return per_round[0]
    if vote == "majority":
        return [Majority([rnd[k] for rnd in per_round]) for k in range(length - 1)]
    chosen = per_round[-1]
    for r in range(len(per_round) - 2, -1, -1):
        diff = [Parity([x, y]) for x, y in zip(per_round[r], per_round[r + 1])]
        same = Lookup(diff, [1] + [0] * ((1 << len(diff)) - 1))
        # index bits: (this round, fallback, agreement)
        chosen = [Lookup([x, y, same], (0, 0, 1, 1, 0, 1, 0, 1)) for x, y in zip(per_round[r], chosen)]
    return chosen


def add_ec_round(b: CircuitBuilder, blk: DataBlock, r_z: int = DEFAULT_REPS,
                 r_x: int = DEFAULT_REPS, tag: str = "ec", vote: str = "agree") -> dict:
    """Repeated Z then X syndrome extraction with voted corrections.

    Corrections are noiseless classically controlled Paulis: Z on ``(k,1)``
    for each row ``k`` chosen by the decoder, X on ``(1,k)`` per column.
    Returns the register groups ``{"Z": [..], "X": [..]}`` for audit, each a
    list over rounds of ``{cell: {pair: register}}``.
    """
    if r_z < 1 or r_x < 1 or r_z % 2 == 0 or r_x % 2 == 0:
        raise ValueError(f"repetition counts must be odd, got r_z={r_z}, r_x={r_x}")
    groups: dict = {"Z": [], "X": []}
    for r in range(r_z):
        b.barrier()
        groups["Z"].append({j: add_z_extraction(b, blk, j, f"{tag}.z{r}.") for j in range(1, blk.n2 + 1)})
    bits = _syndrome_bits(groups["Z"], blk.n1, vote)
    for k in range(1, blk.n1 + 1):
        b.classical_pauli("Z", blk.q(k, 1), Lookup(bits, decoder_table(blk.n1, k)))
    for r in range(r_x):
        b.barrier()
        groups["X"].append({i: add_x_extraction(b, blk, i, f"{tag}.x{r}.") for i in range(1, blk.n1 + 1)})
    bits = _syndrome_bits(groups["X"], blk.n2, vote)
    for k in range(1, blk.n2 + 1):
        b.classical_pauli("X", blk.q(1, k), Lookup(bits, decoder_table(blk.n2, k)))
    b.meta.setdefault("ec_groups", []).append((tag, blk.name, blk.n1, blk.n2, groups))
    return groups


def add_encode(b: CircuitBuilder, blk: DataBlock, basis: str) -> None:
    """Prepare |0_L> (``basis="Z"``) or |+_L> (``basis="X"``) on ``blk``.

    Every qubit starts in the product eigenstate of the logical operator's
    type; one pass of pair measurements then fixes the opposite-type
    stabilizers through decoder corrections, which commute with the logical.
    """
    basis = basis.upper()
    b.barrier()
    if basis == "Z":
        for q in blk.qubits:
            b.prep0(q)
        b.barrier()
        cells = {j: add_z_extraction(b, blk, j, "enc.") for j in range(1, blk.n2 + 1)}
        bits = _syndrome_bits([cells], blk.n1)
        for k in range(1, blk.n1 + 1):
            b.classical_pauli("Z", blk.q(k, 1), Lookup(bits, decoder_table(blk.n1, k)))
    elif basis == "X":
        for q in blk.qubits:
            b.prep_plus(q)
        b.barrier()
        cells = {i: add_x_extraction(b, blk, i, "enc.") for i in range(1, blk.n1 + 1)}
        bits = _syndrome_bits([cells], blk.n2)
        for k in range(1, blk.n2 + 1):
            b.classical_pauli("X", blk.q(1, k), Lookup(bits, decoder_table(blk.n2, k)))
    else:
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")


def add_convert_up(b: CircuitBuilder, blk: DataBlock, name: str | None = None) -> DataBlock:
    """C(3,3) -> C(5,3): append two rows in |0> and fix X(2,*)X(4,*), X(3,*)X(5,*).

    Per column the two ancillas measure ``X(2,j)X(4,j)`` and ``X(3,j)X(5,j)``;
    the parity over columns of each drives a Z on ``(4,1)`` or ``(5,1)``.
    Written for the 3 -> 5 row case.
    """
    if (blk.n1, blk.n2) != (3, 3):
        raise UnsupportedGeometry("upward conversion is defined for C(3,3) input blocks")
    name = name or blk.name
    n2 = blk.n2
    b.barrier()
    new_rows = {}
    for i in (4, 5):
        for j in range(1, n2 + 1):
            q = b.new_qubit("data", "C", f"({i},{j})")
            new_rows[(i, j)] = q
    for q in new_rows.values():
        b.prep0(q)
    qubits = list(blk.qubits) + [new_rows[(i, j)] for i in (4, 5) for j in range(1, n2 + 1)]
    out = DataBlock(name, 5, n2, tuple(qubits))
    regs_24, regs_35 = [], []
    for j in range(1, n2 + 1):
        a24 = b.new_qubit("ancilla", "A", f"up.c{j}.X2X4")
        a35 = b.new_qubit("ancilla", "A", f"up.c{j}.X3X5")
        b.prep0(a24)
        b.prep0(a35)
        b.h(a24)
        b.h(a35)
        b.cnot(a35, out.q(5, j))
        b.cnot(a35, out.q(3, j))
        b.cnot(a24, out.q(4, j))
        b.cnot(a24, out.q(2, j))
        b.h(a24)
        b.h(a35)
        regs_24.append(b.measure_z(a24, f"up.X(2,{j})X(4,{j})"))
        regs_35.append(b.measure_z(a35, f"up.X(3,{j})X(5,{j})"))
    b.classical_pauli("Z", out.q(4, 1), Parity(regs_24))
    b.classical_pauli("Z", out.q(5, 1), Parity(regs_35))
    b.set_block(out)
    b.meta.setdefault("convert_up", []).append({"X2X4": regs_24, "X3X5": regs_35})
    return out


def add_convert_down(b: CircuitBuilder, blk: DataBlock, name: str | None = None,
                     reps: int = DEFAULT_REPS, vote: str = "agree") -> DataBlock:
    """C(5,3) -> C(3,3): gauge-fix rows 5 and 4, measure them out, track the logical.

    The row-local Z pairs of rows 5 and 4 are measured ``reps`` times and
    combined like an EC syndrome. Each fixing X on row 4 or 5 comes with the
    same X on row 1, so the pair is an X gauge operator of C(5,3). Each
    measured row then reads all zeros or all ones up to errors; rows reading
    ones flip ``Z(*,1)``, so the parity of the two row majorities is
    recorded as a tracked ``X_L`` on the output block. ``reps=1`` is the
    single-pass version, which a single fault can defeat.
    """
    if (blk.n1, blk.n2) != (5, 3):
        raise UnsupportedGeometry("downward conversion is defined for C(5,3) input blocks")
    if reps < 1 or reps % 2 == 0:
        raise ValueError(f"repetition count must be odd, got {reps}")
    name = name or blk.name
    n2 = blk.n2
    fixes: dict = {5: [], 4: []}
    for r in range(reps):
        b.barrier()
        for i in (5, 4):
            fixes[i].append({i: add_x_extraction(b, blk, i, f"down.{r}.r{i}.")})
    for i in (5, 4):
        bits = _syndrome_bits(fixes[i], n2, vote)
        for c in range(1, n2 + 1):
            guard = Lookup(bits, decoder_table(n2, c))
            b.classical_pauli("X", blk.q(i, c), guard)
            b.classical_pauli("X", blk.q(1, c), guard)
    row_regs = {}
    for i in (4, 5):
        row_regs[i] = [b.measure_z(blk.q(i, j), f"down.M({i},{j})") for j in range(1, n2 + 1)]
    out = DataBlock(name, 3, n2, blk.qubits[: 3 * n2])
    b.set_block(out)
    b.track_logical(name, "X", Parity([Majority(row_regs[4]), Majority(row_regs[5])]))
    b.meta.setdefault("convert_down", []).append({"fix": fixes, "rows": row_regs})
    return out


def add_transversal(b: CircuitBuilder, blk: DataBlock, gate: str,
                    target: DataBlock | None = None) -> DataBlock:
    gate = gate.upper()
    b.barrier()
    if gate == "X":
        for j in range(1, blk.n2 + 1):
            b.x(blk.q(1, j))
        return blk
    if gate == "Z":
        for i in range(1, blk.n1 + 1):
            b.z(blk.q(i, 1))
        return blk
    if gate == "CNOT":
        if target is None or (target.n1, target.n2) != (blk.n1, blk.n2):
            raise UnsupportedGeometry("transversal CNOT needs two blocks of the same shape")
        for qc, qt in zip(blk.qubits, target.qubits):
            b.cnot(qc, qt)
        return target
    if gate == "H":
        if blk.n1 != blk.n2:
            raise UnsupportedGeometry(
                f"transversal H needs a square code, got C({blk.n1},{blk.n2})"
            )
        for q in blk.qubits:
            b.h(q)
        n = blk.n1
        transposed = tuple(blk.q(j, i) for i in range(1, n + 1) for j in range(1, n + 1))
        out = DataBlock(blk.name, n, n, transposed)
        b.set_block(out)
        return out
    raise ValueError(f"unknown transversal gate {gate!r}")


def add_idle(b: CircuitBuilder, blk: DataBlock) -> None:
    b.barrier()
    b.idle(list(blk.qubits))


# --- finished circuits ----------------------------------------------------------


def _start(name: str, n1: int, n2: int, probe: str | None, block: str = "D"):
    b = CircuitBuilder(name)
    if probe is None:
        blk = b.new_block(block, n1, n2, alive=True)
    else:
        blk = b.new_block(block, n1, n2, alive=False)
        with b.noiseless():
            add_encode(b, blk, probe)
        b.meta["probe"] = probe.upper()
    return b, blk


def _finish(b: CircuitBuilder, blk: DataBlock) -> Circuit:
    b.output = blk.name
    b.set_block(blk)
    return b.build()


def z_syndrome_extraction(code: SubsystemCode, j: int, probe: str | None = None) -> Circuit:
    _check_code(code)
    if not 1 <= j <= code.n2:
        raise IndexError(f"column {j} outside 1..{code.n2}")
    b, blk = _start(f"z_extract_{code.n1}x{code.n2}_c{j}", code.n1, code.n2, probe)
    b.barrier()
    b.meta["gauge_registers"] = add_z_extraction(b, blk, j)
    return _finish(b, blk)


def x_syndrome_extraction(code: SubsystemCode, i: int, probe: str | None = None) -> Circuit:
    _check_code(code)
    if not 1 <= i <= code.n1:
        raise IndexError(f"row {i} outside 1..{code.n1}")
    b, blk = _start(f"x_extract_{code.n1}x{code.n2}_r{i}", code.n1, code.n2, probe)
    b.barrier()
    b.meta["gauge_registers"] = add_x_extraction(b, blk, i)
    return _finish(b, blk)


def ec_round(code: SubsystemCode, r_z: int = DEFAULT_REPS, r_x: int = DEFAULT_REPS,
             probe: str | None = None, vote: str = "agree") -> Circuit:
    _check_code(code)
    b, blk = _start(f"ec_{code.n1}x{code.n2}_r{r_z}{r_x}", code.n1, code.n2, probe)
    add_ec_round(b, blk, r_z, r_x, vote=vote)
    return _finish(b, blk)


def encode_logical(code: SubsystemCode, basis: str) -> Circuit:
    _check_code(code)
    b = CircuitBuilder(f"encode_{code.n1}x{code.n2}_{basis}")
    blk = b.new_block("D", code.n1, code.n2, alive=False)
    add_encode(b, blk, basis)
    b.meta["probe"] = basis.upper()
    return _finish(b, blk)


def convert_up(probe: str | None = None) -> Circuit:
    b, blk = _start("convert_up", 3, 3, probe)
    out = add_convert_up(b, blk)
    return _finish(b, out)


def convert_down(probe: str | None = None, reps: int = DEFAULT_REPS) -> Circuit:
    b, blk = _start("convert_down", 5, 3, probe)
    out = add_convert_down(b, blk, reps=reps)
    return _finish(b, out)


def transversal(code: SubsystemCode, gate: str, probe: str | tuple | None = None) -> Circuit:
    """Transversal X, Z, H (square codes) or CNOT between two blocks.

    For CNOT ``probe`` may be a pair of bases for the control and target.
    """
    _check_code(code)
    gate = gate.upper()
    if gate == "H" and code.n1 != code.n2:
        raise UnsupportedGeometry(f"transversal H needs a square code, got {code.name}")
    if gate == "CNOT":
        b = CircuitBuilder(f"transversal_cnot_{code.n1}x{code.n2}")
        probes = probe if isinstance(probe, tuple) else (probe, probe)
        ctrl = b.new_block("D", code.n1, code.n2, alive=probes[0] is None)
        tgt = b.new_block("D2", code.n1, code.n2, alive=probes[1] is None)
        with b.noiseless():
            if probes[0]:
                add_encode(b, ctrl, probes[0])
            if probes[1]:
                add_encode(b, tgt, probes[1])
        if probes[0]:
            b.meta["probe"] = tuple(p.upper() for p in probes)
        add_transversal(b, ctrl, "CNOT", tgt)
        return _finish(b, ctrl)
    b, blk = _start(f"transversal_{gate.lower()}_{code.n1}x{code.n2}", code.n1, code.n2, probe)
    out = add_transversal(b, blk, gate)
    return _finish(b, out)


def memory_exrec(code: SubsystemCode, r_z: int = DEFAULT_REPS, r_x: int = DEFAULT_REPS,
                 probe: str = "X", vote: str = "agree") -> Circuit:
    """Leading EC, one idle step on every data qubit, trailing EC."""
    _check_code(code)
    b, blk = _start(f"memory_exrec_{code.n1}x{code.n2}_r{r_z}{r_x}", code.n1, code.n2, probe)
    add_ec_round(b, blk, r_z, r_x, "lead", vote)
    add_idle(b, blk)
    add_ec_round(b, blk, r_z, r_x, "trail", vote)
    return _finish(b, blk)


def convert_up_exrec(r_z: int = DEFAULT_REPS, r_x: int = DEFAULT_REPS, probe: str = "X",
                     vote: str = "agree") -> Circuit:
    b, blk = _start(f"convert_up_exrec_r{r_z}{r_x}", 3, 3, probe)
    add_ec_round(b, blk, r_z, r_x, "lead", vote)
    out = add_convert_up(b, blk)
    add_ec_round(b, out, r_z, r_x, "trail", vote)
    return _finish(b, out)


def convert_down_exrec(r_z: int = DEFAULT_REPS, r_x: int = DEFAULT_REPS, probe: str = "X",
                       vote: str = "agree") -> Circuit:
    b, blk = _start(f"convert_down_exrec_r{r_z}{r_x}", 5, 3, probe)
    add_ec_round(b, blk, r_z, r_x, "lead", vote)
    out = add_convert_down(b, blk, reps=r_x, vote=vote)
    add_ec_round(b, out, r_z, r_x, "trail", vote)
    return _finish(b, out)


def chain_circuit(variant: str, N: int, r_z: int = DEFAULT_REPS, r_x: int = DEFAULT_REPS,
                  probe: str = "X", vote: str = "agree") -> Circuit:
    """Memory chain of ``N`` cycles, each an idle step followed by EC.

    ``plain-3x3`` stays in C(3,3); ``combined`` converts up first, runs the
    cycles under C(5,3) and converts back down at the end.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    b, blk = _start(f"chain_{variant}_N{N}_r{r_z}{r_x}", 3, 3, probe)
    if variant == "plain-3x3":
        for k in range(N):
            add_idle(b, blk)
            add_ec_round(b, blk, r_z, r_x, f"cyc{k}", vote)
    elif variant == "combined":
        blk = add_convert_up(b, blk)
        for k in range(N):
            add_idle(b, blk)
            add_ec_round(b, blk, r_z, r_x, f"cyc{k}", vote)
        blk = add_convert_down(b, blk, reps=r_x, vote=vote)
    else:
        raise ValueError(f"unknown chain variant {variant!r}")
    return _finish(b, blk)


def conversion_roundtrip(probe: str, logical: str | None = None) -> Circuit:
    """Encode C(3,3), optionally apply a transversal logical X or Z, convert up and back down."""
    b, blk = _start("conversion_roundtrip", 3, 3, probe)
    if logical:
        add_transversal(b, blk, logical)
    out = add_convert_up(b, blk)
    out = add_convert_down(b, out)
    return _finish(b, out)
