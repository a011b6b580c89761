"""Asymmetric stochastic Pauli noise on circuit locations.

Each support qubit of a noisy location independently picks up Z with
probability ``p_z`` and X with probability ``p_x`` (Y when both fire). The
error acts after preparations and gates and before measurements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Mapping

import numpy as np

from .circuit import Circuit, MEAS_KINDS

__all__ = ["Fault", "FaultAssignment", "NoiseModel", "enumerate_single_faults", "sample_faults"]

PAULIS = ("I", "X", "Z", "Y")


@dataclass(frozen=True)
class NoiseModel:
    p_z: float
    p_x: float
    overrides: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for p in (self.p_z, self.p_x, *[v for pair in self.overrides.values() for v in pair]):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")

    @classmethod
    def from_alpha(cls, p_z: float, alpha: float, **kw) -> "NoiseModel":
        if not alpha > 0 or math.isinf(alpha):
            if math.isinf(alpha):
                return cls(p_z, 0.0, **kw)
            raise ValueError("alpha must be positive")
        return cls(p_z, p_z / alpha, **kw)

    @property
    def alpha(self) -> float:
        return self.p_z / self.p_x if self.p_x > 0 else math.inf

    def rates(self, kind: str) -> tuple[float, float]:
        """``(p_z, p_x)`` for a location kind."""
        return self.overrides.get(kind, (self.p_z, self.p_x))

    def is_uniform(self) -> bool:
        return all(v == (self.p_z, self.p_x) for v in self.overrides.values())


@dataclass(frozen=True)
class Fault:
    location: int  # index into Circuit.locations()
    paulis: tuple[str, ...]  # one of I/X/Y/Z per support qubit

    def __post_init__(self) -> None:
        if all(p == "I" for p in self.paulis):
            raise ValueError("a fault must be a non-identity Pauli")


@dataclass(frozen=True)
class FaultAssignment:
    faults: tuple[Fault, ...] = ()
    tag: str = ""

    def __len__(self) -> int:
        return len(self.faults)

    def by_location(self) -> dict[int, tuple[str, ...]]:
        return {f.location: f.paulis for f in self.faults}


def sample_faults(circuit: Circuit, model: NoiseModel, rng: np.random.Generator) -> FaultAssignment:
    """Independent X/Z events on every support qubit of every noisy location."""
    faults = []
    for idx, (_, loc) in enumerate(circuit.locations()):
        if not loc.noisy:
            continue
        p_z, p_x = model.rates(loc.kind)
        k = len(loc.qubits)
        zs = rng.random(k) < p_z
        xs = rng.random(k) < p_x
        if zs.any() or xs.any():
            paulis = tuple(PAULIS[int(x) | int(z) << 1] for x, z in zip(xs, zs))
            faults.append(Fault(idx, paulis))
    return FaultAssignment(tuple(faults))


def enumerate_single_faults(circuit: Circuit, include_noiseless: bool = False) -> Iterator[FaultAssignment]:
    """Every single-location fault: 3 Paulis per 1-qubit location, 15 per 2-qubit location."""
    for idx, (t, loc) in enumerate(circuit.locations()):
        if not (loc.noisy or include_noiseless):
            continue
        for paulis in product(PAULIS, repeat=len(loc.qubits)):
            if all(p == "I" for p in paulis):
                continue
            tag = f"t{t}:{loc.kind}:{','.join(map(str, loc.qubits))}:{''.join(paulis)}"
            yield FaultAssignment((Fault(idx, paulis),), tag)


def count_single_faults(circuit: Circuit) -> int:
    return sum(4 ** len(loc.qubits) - 1 for _, loc in circuit.locations() if loc.noisy)


def is_measurement(kind: str) -> bool:
    return kind in MEAS_KINDS
