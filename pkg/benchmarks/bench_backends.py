"""Compiled kernels against the numpy fallback.

Times the Pauli-frame sampler on memory ExRecs and the tableau engine on
noiseless conversion round trips, checking that both backends agree.

    python benchmarks/bench_backends.py [--trials 200000] [--runs 300]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from subsysqec import builders as B
from subsysqec import tableau
from subsysqec.code import build_code
from subsysqec.engine import ideal_readout, run
from subsysqec.frame import compile_circuit, have_extension, sample
from subsysqec.noise import NoiseModel


def bench_frame(dims, trials: int, backends) -> dict:
    comp = compile_circuit(B.memory_exrec(build_code(*dims), probe="X"))
    model = NoiseModel(1e-3, 1e-3)
    rates, flips = {}, {}
    for backend in backends:
        sample(comp, model, 1000, seed=0, backend=backend)  # warm-up
        t0 = time.perf_counter()
        s = sample(comp, model, trials, seed=1, backend=backend)
        rates[backend] = trials / (time.perf_counter() - t0)
        flips[backend] = s.logical_flips()[1]
    same = all(np.array_equal(flips[backends[0]], f) for f in flips.values())
    return {"rates": rates, "identical": same}


def bench_tableau(runs: int, backends) -> dict:
    circ = B.conversion_roundtrip("X", "Z")
    rates, bits = {}, {}
    for backend in backends:
        prev = tableau.use_extension(backend == "ext")
        try:
            t0 = time.perf_counter()
            bits[backend] = [ideal_readout(run(circ, rng=k), "X", rng=k) for k in range(runs)]
            rates[backend] = runs / (time.perf_counter() - t0)
        finally:
            tableau.use_extension(prev)
    same = all(b == bits[backends[0]] for b in bits.values())
    return {"rates": rates, "identical": same}


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--runs", type=int, default=300)
    args = ap.parse_args(argv)
    backends = ["ext", "numpy"] if have_extension() else ["numpy"]
    if len(backends) == 1:
        print("compiled kernels not built; timing the numpy fallback only")
    print(f"{'benchmark':<34}" + "".join(f"{b:>14}" for b in backends) + "   speedup  identical")
    rows = [(f"frame sampler C{d} trials/s", bench_frame(d, args.trials, backends)) for d in ((3, 3), (5, 3))]
    rows.append(("tableau round trip runs/s", bench_tableau(args.runs, backends)))
    for name, res in rows:
        r = res["rates"]
        speed = f"{r['ext'] / r['numpy']:9.2f}x" if "ext" in r else "         -"
        print(f"{name:<34}" + "".join(f"{r[b]:>14,.0f}" for b in backends) + f"{speed}  {res['identical']}")


if __name__ == "__main__":
    main()
