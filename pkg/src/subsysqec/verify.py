"""Exhaustive single-fault checks of ExRec-shaped circuits."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circuit import Circuit
from .engine import ideal_readout, run
from .frame import compile_circuit, sample
from .noise import enumerate_single_faults

__all__ = ["FaultReport", "RoundTripReport", "conversion_roundtrip_check", "probe_pair",
           "verify_single_fault_tolerance"]


@dataclass
class FaultReport:
    circuits: tuple[str, ...]
    total: int  # fault assignments tried, summed over circuits
    failing: tuple[str, ...]  # "<circuit>/<fault tag>"
    gauge_seeds: int
    cross_checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failing and not self.mismatches

    def summary(self) -> str:
        status = "OK" if self.ok else "FAIL"
        lines = [f"{status}: {len(self.failing)} failing of {self.total} single faults "
                 f"({', '.join(self.circuits)}; {self.gauge_seeds} gauge seeds, "
                 f"{self.cross_checked} tableau cross-checks, {len(self.mismatches)} mismatches)"]
        lines += [f"  {tag}" for tag in self.failing]
        return "\n".join(lines)


def _flip_for_probe(samples, probe: str) -> np.ndarray:
    x_flip, z_flip = samples.logical_flips()
    return x_flip if probe == "Z" else z_flip


def verify_single_fault_tolerance(circuits: Circuit | Iterable[Circuit], gauge_seeds: int = 3,
                                  cross_check: int = 100, seed: int = 0) -> FaultReport:
    """Inject every single fault into each probe circuit and read the output ideally.

    Each circuit must carry a probe preparation (``meta["probe"]`` of "Z" or
    "X"); pass both probe variants of an ExRec to cover both logical failure
    types. Gauge outcomes are random, so every fault is replayed under
    ``gauge_seeds`` independent streams and counts as failing if any run
    fails. ``cross_check`` faults per circuit are also replayed on the full
    tableau engine; disagreements land in ``mismatches``.
    """
    if isinstance(circuits, Circuit):
        circuits = [circuits]
    circuits = list(circuits)
    rng = np.random.default_rng(seed)
    total = 0
    failing: list[str] = []
    mismatches: list = []
    checked = 0
    for circ in circuits:
        probe = circ.meta.get("probe")
        if probe not in ("Z", "X"):
            raise ValueError(f"{circ.name} has no single probe preparation")
        comp = compile_circuit(circ)
        faults = list(enumerate_single_faults(circ))
        total += len(faults)
        bad = np.zeros(len(faults), dtype=bool)
        first = None
        for g in range(gauge_seeds):
            flips = _flip_for_probe(sample(comp, None, len(faults), seed=seed + g, faults=faults), probe)
            if first is None:
                first = flips
            bad |= flips.astype(bool)
        label = f"{circ.name}[{probe}]"
        failing += [f"{label}/{faults[i].tag}" for i in np.flatnonzero(bad)]
        picks = rng.choice(len(faults), size=min(cross_check, len(faults)), replace=False)
        for i in picks:
            tab_value = ideal_readout(run(circ, faults[i], rng=int(i)), probe, rng=int(i))
            if tab_value != first[i] and not bad[i]:
                mismatches.append((label, faults[i].tag))
            # when the fault fails only on some gauge streams the tableau may land either way
        checked += len(picks)
    return FaultReport(tuple(f"{c.name}[{c.meta['probe']}]" for c in circuits), total, tuple(failing), gauge_seeds,
                       checked, mismatches)


def probe_pair(build, *args, **kw) -> Sequence[Circuit]:
    """Both probe variants of a builder taking a ``probe`` keyword."""
    return [build(*args, probe="Z", **kw), build(*args, probe="X", **kw)]


@dataclass
class RoundTripReport:
    trials: int
    results: dict  # (probe, logical) -> number of trials that read the expected bit

    @property
    def ok(self) -> bool:
        return all(v == self.trials for v in self.results.values())

    def summary(self) -> str:
        lines = []
        for (probe, logical), good in self.results.items():
            name = f"|{'0' if probe == 'Z' else '+'}_L>" + (f" after {logical}_L" if logical else "")
            lines.append(f"{name}: {good}/{self.trials}")
        return "\n".join(lines)


def conversion_roundtrip_check(trials: int = 1000, seed: int = 0) -> RoundTripReport:
    """Noiseless encode -> (logical Pauli) -> convert up -> convert down -> ideal readout.

    Every trial runs the full tableau engine with its own random gauge
    outcomes. A logical X flips the Z_L readout and a logical Z the X_L one.
    """
    from .builders import conversion_roundtrip

    results = {}
    for probe in ("Z", "X"):
        for logical in (None, "X", "Z"):
            circ = conversion_roundtrip(probe, logical)
            expected = int(logical is not None and logical != probe)
            good = 0
            for k in range(trials):
                rng = np.random.default_rng([seed, k])
                good += ideal_readout(run(circ, rng=rng), probe, rng=rng) == expected
            results[(probe, logical)] = good
    return RoundTripReport(trials, results)
