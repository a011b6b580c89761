from subsysqec import builders as B
from subsysqec.verify import conversion_roundtrip_check, probe_pair, verify_single_fault_tolerance


def test_single_round_ec_is_not_fault_tolerant(c33):
    report = verify_single_fault_tolerance(probe_pair(B.ec_round, c33, 1, 1), gauge_seeds=2)
    assert not report.ok and report.failing
    assert report.summary().startswith("FAIL")


def test_repeated_ec_is_fault_tolerant(c33):
    report = verify_single_fault_tolerance(probe_pair(B.memory_exrec, c33), gauge_seeds=2, cross_check=30)
    assert report.ok, report.summary()
    assert report.cross_checked == 60 and not report.mismatches


def test_per_bit_majority_is_defeated(c33):
    report = verify_single_fault_tolerance(probe_pair(B.memory_exrec, c33, vote="majority"), gauge_seeds=2,
                                           cross_check=0)
    assert not report.ok


def test_convert_up_exrec_fault_tolerant():
    report = verify_single_fault_tolerance(probe_pair(B.convert_up_exrec), gauge_seeds=2, cross_check=20)
    assert report.ok, report.summary()


def test_single_pass_gauge_fix_is_defeated():
    def build(probe):
        b = B.CircuitBuilder("down_single")
        blk = b.new_block("D", 5, 3, alive=False)
        with b.noiseless():
            B.add_encode(b, blk, probe)
        B.add_ec_round(b, blk, tag="lead")
        out = B.add_convert_down(b, blk, reps=1)
        B.add_ec_round(b, out, tag="trail")
        b.meta["probe"] = probe
        b.output = out.name
        b.set_block(out)
        return b.build()

    report = verify_single_fault_tolerance([build("Z"), build("X")], gauge_seeds=2, cross_check=0)
    assert not report.ok


def test_roundtrip_small():
    report = conversion_roundtrip_check(trials=40, seed=3)
    assert report.ok, report.summary()
    assert len(report.results) == 6
