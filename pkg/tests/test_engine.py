import numpy as np
import pytest

from subsysqec import builders as B
from subsysqec.circuit import CircuitBuilder
from subsysqec.decoder import reconstruct
from subsysqec.engine import ideal_readout, readout_bits, run
from subsysqec.pauli import PauliOperator


def _encoded(code, basis):
    b = CircuitBuilder("probe")
    blk = b.new_block("D", code.n1, code.n2, alive=False)
    with b.noiseless():
        B.add_encode(b, blk, basis)
    return b, blk


def _finish(b, blk):
    b.output = blk.name
    b.set_block(blk)
    return b.build()


def _syndrome_circuit(code, basis, errors, error_type):
    """Encode, apply ``errors`` [(pauli, i, j)], extract every column or row."""
    b, blk = _encoded(code, basis)
    b.barrier()
    for pauli, i, j in errors:
        getattr(b, pauli.lower())(blk.q(i, j))
    b.barrier()
    if error_type == "Z":
        regs = {j: B.add_z_extraction(b, blk, j) for j in range(1, code.n2 + 1)}
        length = code.n1 - 1
    else:
        regs = {i: B.add_x_extraction(b, blk, i) for i in range(1, code.n1 + 1)}
        length = code.n2 - 1
    return _finish(b, blk), regs, length


def _bits(result, regs, error_type, length):
    outcomes = {(a, c): int(result.outcomes[r]) for c, pairs in regs.items() for a, r in pairs.items()}
    return reconstruct(error_type, outcomes, length)


def test_prep_measure_deterministic():
    b = CircuitBuilder()
    q = b.new_qubit("data", "D", "q")
    b.prep0(q)
    b.measure_z(q)
    res = run(b.build(), rng=0)
    assert res.outcomes[0] == 0 and not res.random[0]


def test_hadamard_measurement_is_fair():
    b = CircuitBuilder()
    q = b.new_qubit("data", "D", "q")
    b.prep0(q)
    b.h(q)
    b.measure_z(q)
    c = b.build()
    rng = np.random.default_rng(3)
    n = 10_000
    ones = sum(int(run(c, rng=rng).outcomes[0]) for _ in range(n))
    assert abs(ones / n - 0.5) < 3 * 0.5 / np.sqrt(n)


@pytest.mark.parametrize("basis", ["Z", "X"])
def test_encoded_states_are_code_states(c53, basis):
    circ = B.encode_logical(c53, basis)
    logical = c53.logical_z if basis == "Z" else c53.logical_x
    for seed in range(8):
        res = run(circ, rng=seed, check=True)
        slots = res.output_qubits()
        assert all(res.tableau.expectation_of(g, slots) == 1 for g in c53.stabilizers)
        assert res.tableau.expectation_of(logical, slots) == 1


def test_all_zero_state_satisfies_z_stabilizers(c53):
    b = CircuitBuilder()
    blk = b.new_block("D", 5, 3, alive=False)
    for q in blk.qubits:
        b.prep0(q)
    res = run(_finish(b, blk), rng=0)
    assert all(res.tableau.expectation_of(g, res.output_qubits()) == 1 for g in c53.z_stabilizers)


def test_clean_extraction_reads_zero(c53):
    circ, regs, length = _syndrome_circuit(c53, "Z", [], "Z")
    for seed in range(5):
        assert _bits(run(circ, rng=seed), regs, "Z", length).bits == (0, 0, 0, 0)


def test_z_on_row_two_flips_first_two_bits(c53):
    for j in (1, 2, 3):
        circ, regs, length = _syndrome_circuit(c53, "Z", [("Z", 2, j)], "Z")
        assert _bits(run(circ, rng=j), regs, "Z", length).bits == (1, 1, 0, 0)


def test_x_on_column_two_flips_both_bits(c53):
    for i in range(1, 6):
        circ, regs, length = _syndrome_circuit(c53, "X", [("X", i, 2)], "X")
        assert _bits(run(circ, rng=i), regs, "X", length).bits == (1, 1)


def test_gauge_outcomes_random_but_products_fixed(c53):
    circ, regs, length = _syndrome_circuit(c53, "X", [], "X")
    seen = set()
    for seed in range(10):
        res = run(circ, rng=seed)
        assert _bits(res, regs, "X", length).bits == (0, 0)
        seen.add(int(res.outcomes[regs[1][1]]))
    assert seen == {0, 1}


@pytest.mark.parametrize("seed", range(6))
def test_random_errors_match_commutation(c53, seed):
    rng = np.random.default_rng(seed)
    errors = [(p, int(rng.integers(1, 6)), int(rng.integers(1, 4))) for p in rng.choice(["X", "Z"], 4)]
    err = PauliOperator.identity(15)
    for p, i, j in errors:
        e = PauliOperator.from_sites(15, p, [c53.q(i, j)])
        err = PauliOperator(15, err.x ^ e.x, err.z ^ e.z)
    for error_type, stabs in (("Z", c53.x_stabilizers), ("X", c53.z_stabilizers)):
        circ, regs, length = _syndrome_circuit(c53, "Z", errors, error_type)
        expect = tuple(int(not err.commutes(s)) for s in stabs)
        assert _bits(run(circ, rng=seed), regs, error_type, length).bits == expect


def test_readout_after_logical_z_flips(c53):
    b, blk = _encoded(c53, "X")
    for i in range(1, 6):
        b.z(blk.q(i, 1))
    res = run(_finish(b, blk), rng=1)
    assert ideal_readout(res, "X", rng=1) == 1


def test_single_x_is_corrected_by_readout(c53):
    for i in range(1, 6):
        for j in range(1, 4):
            b, blk = _encoded(c53, "Z")
            b.x(blk.q(i, j))
            res = run(_finish(b, blk), rng=i * 7 + j)
            assert ideal_readout(res, "Z", rng=0) == 0


def test_convert_up_preserves_plus_state():
    circ = B.convert_up("X")
    rng = np.random.default_rng(0)
    for _ in range(1000):
        assert ideal_readout(run(circ, rng=rng), "X", rng=rng) == 0


def test_convert_up_copies_row_two_z_error():
    b, blk = _encoded(B.build_code(3, 3), "X")
    b.z(blk.q(2, 2))
    out = B.add_convert_up(b, blk)
    circ = _finish(b, out)
    code = B.build_code(5, 3)
    for seed in range(6):
        res = run(circ, rng=seed)
        slots = res.output_qubits()
        flipped = [k + 1 for k, s in enumerate(code.x_stabilizers)
                   if res.tableau.expectation_of(s, slots) == -1]
        # the X2X4 parity fires, so a Z lands on row 4 next to the one on row 2
        assert flipped == [1, 2, 3, 4]
        assert ideal_readout(res, "X", rng=seed) == 0


def test_convert_down_rows_uniform_and_tracked():
    circ = B.convert_down("Z")
    rows = circ.meta["convert_down"][0]["rows"]
    seen = set()
    for seed in range(60):
        res = run(circ, rng=seed)
        r4 = {int(res.outcomes[r]) for r in rows[4]}
        r5 = {int(res.outcomes[r]) for r in rows[5]}
        assert len(r4) == 1 and len(r5) == 1
        value = (r4.pop(), r5.pop())
        seen.add(value)
        assert res.tracked.get("D", {"X": 0})["X"] == value[0] ^ value[1]
        assert ideal_readout(res, "Z", rng=seed) == 0
    assert {(0, 1), (1, 0)} & seen and {(0, 0), (1, 1)} & seen


def test_transversal_cnot_truth_table(c33):
    cases = {("Z", "Z"): {"D": ("Z", 0), "D2": ("Z", 0)},
             ("X", "X"): {"D": ("X", 0), "D2": ("X", 0)}}
    for probes, expect in cases.items():
        circ = B.transversal(c33, "CNOT", probes)
        for seed in range(4):
            res = run(circ, rng=seed)
            for name, (basis, bit) in expect.items():
                circ_blk = type(circ)(circ.name, circ.qubits, circ.steps, circ.num_registers,
                                      circ.register_labels, circ.blocks, name, circ.meta)
                view = type(res)(circ_blk, res.outcomes, res.random, res.tracked, res.tableau, res.slots)
                assert ideal_readout(view, basis, rng=seed) == bit


def test_transversal_cnot_propagates_x(c33):
    b = CircuitBuilder()
    ctrl = b.new_block("D", 3, 3, alive=False)
    tgt = b.new_block("D2", 3, 3, alive=False)
    with b.noiseless():
        B.add_encode(b, ctrl, "Z")
        B.add_encode(b, tgt, "Z")
    B.add_transversal(b, ctrl, "X")
    B.add_transversal(b, ctrl, "CNOT", tgt)
    circ = _finish(b, tgt)
    for seed in range(4):
        res = run(circ, rng=seed)
        assert ideal_readout(res, "Z", rng=seed) == 1
        bits = readout_bits(res, "Z", rng=seed)
        assert bits.shape == (3, 3)


def _random_clifford(seed, n=4, depth=12):
    rng = np.random.default_rng(seed)
    b = CircuitBuilder("rand")
    qs = [b.new_qubit("data", "D", str(k)) for k in range(n)]
    for q in qs:
        b.prep0(q)
    for _ in range(depth):
        if rng.random() < 0.4:
            b.h(qs[int(rng.integers(n))])
        else:
            c, t = rng.choice(n, 2, replace=False)
            b.cnot(qs[int(c)], qs[int(t)])
    return b.build()


def _propagate(circ, start, x, z):
    # push an unsigned Pauli through the locations after ``start``
    x, z = x.copy(), z.copy()
    for idx, (_, loc) in enumerate(circ.locations()):
        if idx <= start:
            continue
        if loc.kind == "GateH":
            q = loc.qubits[0]
            x[q], z[q] = z[q], x[q]
        elif loc.kind == "GateCNOT":
            c, t = loc.qubits
            x[t] ^= x[c]
            z[c] ^= z[t]
    return x, z


@pytest.mark.parametrize("seed", range(8))
def test_fault_equals_conjugated_fault_at_end(seed):
    from subsysqec.noise import Fault, FaultAssignment

    circ = _random_clifford(seed)
    rng = np.random.default_rng(100 + seed)
    locs = circ.locations()
    idx = int(rng.integers(len(locs)))
    loc = locs[idx][1]
    paulis = tuple(rng.choice(["X", "Y", "Z"]) for _ in loc.qubits)
    faulty = run(circ, FaultAssignment((Fault(idx, paulis),)), rng=0)
    clean = run(circ, rng=0)
    x = np.zeros(circ.num_qubits, dtype=np.uint8)
    z = np.zeros(circ.num_qubits, dtype=np.uint8)
    for q, p in zip(loc.qubits, paulis):
        x[q] ^= p in "XY"
        z[q] ^= p in "ZY"
    x, z = _propagate(circ, idx, x, z)
    for q in range(circ.num_qubits):
        if x[q] and z[q]:
            clean.tableau.apply_pauli(clean.slots.slots[q], "Y")
        elif x[q]:
            clean.tableau.apply_pauli(clean.slots.slots[q], "X")
        elif z[q]:
            clean.tableau.apply_pauli(clean.slots.slots[q], "Z")
    n = faulty.tableau.n
    for row in range(n, 2 * n):
        t = faulty.tableau
        assert clean.tableau.expectation(t.x[row], t.z[row], bool(t.r[row])) == 1


def test_runs_are_deterministic(c33):
    circ = B.memory_exrec(c33, probe="X")
    a, b = run(circ, rng=17), run(circ, rng=17)
    assert np.array_equal(a.outcomes, b.outcomes) and a.tracked == b.tracked
