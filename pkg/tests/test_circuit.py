import json

import pytest

from subsysqec import builders as B
from subsysqec.circuit import (
    CircuitBuilder,
    Const,
    Lookup,
    Majority,
    MalformedCircuit,
    Parity,
    evaluate,
)
from subsysqec.code import UnsupportedGeometry
from subsysqec.noise import count_single_faults


def test_z_extraction_counts(c53):
    c = B.z_syndrome_extraction(c53, 1)
    counts = c.counts()
    assert len(c.qubits_with_role("ancilla")) == 5
    assert counts["GateCNOT"] == 10 and counts["GateH"] == 10 and counts["MeasZ"] == 5
    assert sorted(c.meta["gauge_registers"]) == [0, 1, 2, 3, 4]


def test_x_extraction_counts(c53):
    c = B.x_syndrome_extraction(c53, 1)
    counts = c.counts()
    assert len(c.qubits_with_role("ancilla")) == 3
    assert counts["GateCNOT"] == 6 and counts["MeasZ"] == 3
    assert "GateH" not in counts


def test_x_extraction_uses_data_as_controls(c53):
    c = B.x_syndrome_extraction(c53, 2)
    data = set(c.blocks["D"].qubits)
    cnots = [loc for _, loc in c.locations() if loc.kind == "GateCNOT"]
    assert all(loc.qubits[0] in data for loc in cnots)
    zc = B.z_syndrome_extraction(c53, 2)
    cnots = [loc for _, loc in zc.locations() if loc.kind == "GateCNOT"]
    assert all(loc.qubits[1] in data for loc in cnots)


def test_extraction_index_range(c53):
    with pytest.raises(IndexError):
        B.z_syndrome_extraction(c53, 4)
    with pytest.raises(IndexError):
        B.x_syndrome_extraction(c53, 6)


def test_ec_round_counts(c33, c53):
    c = B.ec_round(c53, 3, 3)
    # 3 rounds x 3 columns x 5 pairs, plus 3 rounds x 5 rows x 3 pairs
    assert c.counts()["MeasZ"] == 45 + 45
    single = B.ec_round(c33, 1, 1)
    assert single.counts()["MeasZ"] == 9 + 9
    with pytest.raises(ValueError):
        B.ec_round(c33, 2, 3)


def test_convert_up_per_column_counts():
    c = B.convert_up()
    counts = c.counts()
    assert len(c.qubits_with_role("ancilla")) == 2 * 3
    assert counts["GateCNOT"] == 4 * 3 and counts["GateH"] == 4 * 3 and counts["MeasZ"] == 2 * 3
    assert c.blocks[c.output].n1 == 5


def test_convert_down_shapes():
    c = B.convert_down()
    out = c.blocks[c.output]
    assert (out.n1, out.n2) == (3, 3)
    assert c.counts()["TrackLogical"] == 1
    single = B.convert_down(reps=1)
    assert single.counts()["MeasZ"] == 6 + 6


def test_transversal_h_rejected_on_rectangular(c53, c33):
    with pytest.raises(UnsupportedGeometry):
        B.transversal(c53, "H")
    B.transversal(c33, "H")


def test_conversion_geometry_checked(c53):
    b = CircuitBuilder()
    blk = b.new_block("D", 5, 3)
    with pytest.raises(UnsupportedGeometry):
        B.add_convert_up(b, blk)


def test_chain_locations_affine():
    for variant in ("plain-3x3", "combined"):
        counts = [B.chain_circuit(variant, n).noisy_location_count() for n in range(4)]
        steps = {counts[k + 1] - counts[k] for k in range(3)}
        assert len(steps) == 1
    assert B.chain_circuit("plain-3x3", 0).noisy_location_count() == 0
    with pytest.raises(ValueError):
        B.chain_circuit("bogus", 1)


def test_combined_chain_stage_order():
    c = B.chain_circuit("combined", 1)
    labels = c.register_labels
    first = {k: min(i for i, lab in enumerate(labels) if lab.startswith(k))
             for k in ("up.", "cyc0.", "down.")}
    assert first["up."] < first["cyc0."] < first["down."]


def test_every_builder_validates(c33, c53):
    circuits = [
        B.z_syndrome_extraction(c53, 2), B.x_syndrome_extraction(c53, 3), B.ec_round(c33),
        B.encode_logical(c53, "X"), B.convert_up("Z"), B.convert_down("X"),
        B.transversal(c33, "CNOT", ("Z", "X")), B.memory_exrec(c53), B.convert_up_exrec(),
        B.convert_down_exrec(), B.chain_circuit("combined", 2), B.conversion_roundtrip("X", "Z"),
    ]
    for c in circuits:
        c.validate()


def test_builds_are_reproducible(c53):
    assert B.memory_exrec(c53).fingerprint() == B.memory_exrec(c53).fingerprint()


def test_json_dump_parses(c33):
    doc = json.loads(B.ec_round(c33, 1, 1).to_json())
    assert doc["output"] == "D"
    assert len(doc["registers"]) == 18
    assert {"t", "kind"} <= set(doc["locations"][0])


def test_validate_rejects_double_use():
    b = CircuitBuilder()
    q = b.new_qubit("data", "D", "q")
    b.prep0(q)
    c = b.build()
    step = c.steps[0]
    bad = type(step)(step.locations + step.locations, step.classical)
    broken = type(c)(c.name, c.qubits, (bad,), c.num_registers, c.register_labels)
    with pytest.raises(MalformedCircuit):
        broken.validate()


def test_classical_expressions():
    outcomes = [1, 0, 1, 1]
    assert evaluate(Const(1), outcomes) == 1
    assert evaluate(Parity([0, 2]), outcomes) == 0
    assert evaluate(Majority([0, 1, 2]), outcomes) == 1
    assert evaluate(Lookup([0, 1], (0, 1, 1, 0)), outcomes) == 1
    nested = Lookup([Parity([0, 1]), Majority([1, 2, 3])], (1, 0, 0, 0))
    assert evaluate(nested, outcomes) == 0
    assert Parity([0, 2]) == Parity([0, 2])
    assert len({Parity([0, 2]), Parity([0, 2])}) == 1


def test_single_fault_count_matches_locations():
    c = B.convert_up()
    expected = sum(15 if len(loc.qubits) == 2 else 3 for _, loc in c.locations() if loc.noisy)
    assert count_single_faults(c) == expected


def test_live_data_qubits_busy_every_step(c33, c53):
    # between first and last use, a data qubit sits in some location at every step
    for c in (B.ec_round(c33), B.memory_exrec(c53), B.convert_up_exrec(), B.convert_down_exrec()):
        used = [{q for loc in step.locations for q in loc.qubits} for step in c.steps]
        for q, info in enumerate(c.qubits):
            if info.role != "data":
                continue
            times = [t for t, u in enumerate(used) if q in u]
            assert len(times) == times[-1] - times[0] + 1, (c.name, q)
