import numpy as np
import pytest

from subsysqec import builders as B
from subsysqec import tableau
from subsysqec.engine import ideal_readout, run
from subsysqec.frame import compile_circuit, have_extension, sample
from subsysqec.noise import NoiseModel, sample_faults

needs_ext = pytest.mark.skipif(not have_extension(), reason="compiled kernels not built")


@pytest.mark.parametrize("probe", ["X", "Z"])
def test_frame_matches_tableau_on_random_faults(c33, probe):
    circ = B.memory_exrec(c33, probe=probe)
    comp = compile_circuit(circ)
    rng = np.random.default_rng(0)
    faults = [sample_faults(circ, NoiseModel(3e-3, 3e-3), rng) for _ in range(120)]
    x_flip, z_flip = sample(comp, None, len(faults), seed=5, faults=faults).logical_flips()
    frame = z_flip if probe == "X" else x_flip
    tab = [ideal_readout(run(circ, fa, rng=k), probe, rng=k) for k, fa in enumerate(faults)]
    assert frame.tolist() == tab
    assert 0 < sum(tab) < len(tab)


def test_noiseless_frame_never_fails():
    for probe in ("Z", "X"):
        comp = compile_circuit(B.convert_down_exrec(probe=probe))
        x_flip, z_flip = sample(comp, None, 500, seed=1).logical_flips()
        assert not (x_flip if probe == "Z" else z_flip).any()


def test_trial_streams_split_freely(c33):
    comp = compile_circuit(B.memory_exrec(c33, probe="X"))
    model = NoiseModel(2e-3, 1e-3)
    whole = sample(comp, model, 3000, seed=9)
    parts = [sample(comp, model, 1000, seed=9, trial_start=s) for s in (0, 1000, 2000)]
    assert np.array_equal(whole.z, np.concatenate([p.z for p in parts]))
    assert np.array_equal(whole.x, np.concatenate([p.x for p in parts]))


@needs_ext
@pytest.mark.parametrize("kind", ["memory", "convert_down"])
def test_backends_bit_identical(c53, kind):
    circ = B.memory_exrec(c53, probe="X") if kind == "memory" else B.convert_down_exrec(probe="Z")
    comp = compile_circuit(circ)
    model = NoiseModel(3e-3, 1e-3)
    a = sample(comp, model, 4000, seed=21, trial_start=7, backend="ext")
    b = sample(comp, model, 4000, seed=21, trial_start=7, backend="numpy")
    assert np.array_equal(a.x, b.x) and np.array_equal(a.z, b.z)
    assert np.array_equal(a.tracked, b.tracked)


@needs_ext
def test_tableau_kernels_agree(c53):
    circ = B.convert_up_exrec(probe="X")
    outs = []
    for flag in (True, False):
        prev = tableau.use_extension(flag)
        try:
            res = run(circ, rng=4)
            outs.append((res.outcomes.copy(), ideal_readout(res, "X", rng=4)))
        finally:
            tableau.use_extension(prev)
    assert np.array_equal(outs[0][0], outs[1][0]) and outs[0][1] == outs[1][1]


def test_unknown_backend(c33):
    comp = compile_circuit(B.memory_exrec(c33))
    with pytest.raises(ValueError):
        sample(comp, None, 10, seed=0, backend="gpu")
