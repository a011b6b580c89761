"""Bacon-Shor subsystem codes C(n1, n2) on an n1 x n2 grid.

Generator order is fixed and shared by the decoder, circuit builders and
CSV output:

* stabilizers: ``S_X1 .. S_X(n1-1)`` (row pairs) then ``S_Z1 .. S_Z(n2-1)``
  (column pairs);
* gauge: X pairs ``X(i,j)X(i+1,j)`` row-major over ``(i, j)``, then Z pairs
  ``Z(i,j)Z(i,j+1)`` row-major.

Syndrome bit 0 means eigenvalue +1.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache

from .pauli import GeneratorSet, GridIndex, PauliOperator, in_span, multiply

__all__ = [
    "PauliClass",
    "Classification",
    "SubsystemCode",
    "UnsupportedGeometry",
    "build_code",
    "classify",
    "correctable_counts",
    "stabilizer_from_gauge",
]


class UnsupportedGeometry(ValueError):
    pass


class PauliClass(Enum):
    STABILIZER = "identity-up-to-stabilizer"
    GAUGE = "gauge"
    DRESSED_LOGICAL = "dressed-logical"
    DETECTABLE = "detectable-error"


@dataclass(frozen=True)
class Classification:
    kind: PauliClass
    action: str | None = None  # I, X, Y or Z; None for detectable errors


@dataclass(frozen=True, eq=False)
class SubsystemCode:
    n1: int
    n2: int
    stabilizers: GeneratorSet
    gauge: GeneratorSet
    logical_z: PauliOperator
    logical_x: PauliOperator

    @property
    def n(self) -> int:
        return self.n1 * self.n2

    @property
    def name(self) -> str:
        return f"C({self.n1},{self.n2})"

    def q(self, row: int, col: int) -> int:
        site = GridIndex(row, col)
        site.check(self.n1, self.n2)
        return site.linear(self.n2)

    def site(self, q: int) -> GridIndex:
        return GridIndex.from_linear(q, self.n2)

    def row(self, i: int) -> list[int]:
        return [self.q(i, j) for j in range(1, self.n2 + 1)]

    def column(self, j: int) -> list[int]:
        return [self.q(i, j) for i in range(1, self.n1 + 1)]

    @property
    def x_stabilizers(self) -> list[PauliOperator]:
        return list(self.stabilizers.generators[: self.n1 - 1])

    @property
    def z_stabilizers(self) -> list[PauliOperator]:
        return list(self.stabilizers.generators[self.n1 - 1 :])

    def x_gauge_index(self, i: int, j: int) -> int:
        """Index in ``gauge`` of ``X(i,j)X(i+1,j)``."""
        return (i - 1) * self.n2 + (j - 1)

    def z_gauge_index(self, i: int, j: int) -> int:
        """Index in ``gauge`` of ``Z(i,j)Z(i,j+1)``."""
        return (self.n1 - 1) * self.n2 + (i - 1) * (self.n2 - 1) + (j - 1)

    @cached_property
    def stabilizers_and_gauge(self) -> GeneratorSet:
        return self.gauge.union(self.stabilizers)

    def describe(self) -> str:
        lines = [f"code {self.name}: {self.n} qubits"]
        for name, g in zip(self.stabilizers.names, self.stabilizers):
            lines.append(f"{name} = {g.grid_label(self.n2)}")
        for name, g in zip(self.gauge.names, self.gauge):
            lines.append(f"{name} = {g.grid_label(self.n2)}")
        lines.append(f"L_Z = {self.logical_z.grid_label(self.n2)}")
        lines.append(f"L_X = {self.logical_x.grid_label(self.n2)}")
        return "\n".join(lines)


@lru_cache(maxsize=32)
def build_code(n1: int, n2: int) -> SubsystemCode:
    for dim in (n1, n2):
        if not isinstance(dim, int) or dim < 3 or dim % 2 == 0:
            raise UnsupportedGeometry(f"C({n1},{n2}): dimensions must be odd and >= 3")
    n = n1 * n2

    def q(i, j):
        return (i - 1) * n2 + (j - 1)

    stabs, snames = [], []
    for i in range(1, n1):
        sites = [q(r, j) for r in (i, i + 1) for j in range(1, n2 + 1)]
        stabs.append(PauliOperator.from_sites(n, "X", sites))
        snames.append(f"S_X{i}")
    for j in range(1, n2):
        sites = [q(i, c) for i in range(1, n1 + 1) for c in (j, j + 1)]
        stabs.append(PauliOperator.from_sites(n, "Z", sites))
        snames.append(f"S_Z{j}")

    gauge, gnames = [], []
    for i in range(1, n1):
        for j in range(1, n2 + 1):
            gauge.append(PauliOperator.from_sites(n, "X", [q(i, j), q(i + 1, j)]))
            gnames.append(f"T_X({i},{j})")
    for i in range(1, n1 + 1):
        for j in range(1, n2):
            gauge.append(PauliOperator.from_sites(n, "Z", [q(i, j), q(i, j + 1)]))
            gnames.append(f"T_Z({i},{j})")

    logical_z = PauliOperator.from_sites(n, "Z", [q(i, 1) for i in range(1, n1 + 1)])
    logical_x = PauliOperator.from_sites(n, "X", [q(1, j) for j in range(1, n2 + 1)])
    return SubsystemCode(
        n1,
        n2,
        GeneratorSet(stabs, n, snames, abelian=True),
        GeneratorSet(gauge, n, gnames),
        logical_z,
        logical_x,
    )


def stabilizer_from_gauge(code: SubsystemCode) -> dict[str, list[int]]:
    """Gauge generator indices whose product is each stabilizer generator."""
    recipe = {}
    for i in range(1, code.n1):
        recipe[f"S_X{i}"] = [code.x_gauge_index(i, j) for j in range(1, code.n2 + 1)]
    for j in range(1, code.n2):
        recipe[f"S_Z{j}"] = [code.z_gauge_index(i, j) for i in range(1, code.n1 + 1)]
    return recipe


def _logical_action(code: SubsystemCode, p: PauliOperator) -> str:
    # Z_L anticommuting means an X-like action, and vice versa.
    flips_z = not p.commutes(code.logical_z)
    flips_x = not p.commutes(code.logical_x)
    return {(False, False): "I", (True, False): "X", (False, True): "Z", (True, True): "Y"}[
        (flips_z, flips_x)
    ]


def classify(code: SubsystemCode, p: PauliOperator) -> Classification:
    if any(not p.commutes(s) for s in code.stabilizers):
        return Classification(PauliClass.DETECTABLE)
    if in_span(code.stabilizers, p):
        return Classification(PauliClass.STABILIZER, "I")
    if in_span(code.gauge, p):
        return Classification(PauliClass.GAUGE, "I")
    # Commutes with S, so p lies in the span of gauge and logicals.
    action = _logical_action(code, p)
    residual = p
    if action in ("X", "Y"):
        residual = _unsigned_mul(residual, code.logical_x)
    if action in ("Z", "Y"):
        residual = _unsigned_mul(residual, code.logical_z)
    if not in_span(code.gauge, residual):
        raise AssertionError(f"{p} commutes with S but is not gauge x logical")
    return Classification(PauliClass.DRESSED_LOGICAL, action)


def _unsigned_mul(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    return PauliOperator(a.n, a.x ^ b.x, a.z ^ b.z)


def correctable_counts(code: SubsystemCode) -> tuple[int, int]:
    return (code.n1 - 1) // 2, (code.n2 - 1) // 2


def check_group_relations(code: SubsystemCode) -> list[str]:
    """Names of violated group relations (empty when the code is consistent)."""
    problems = []
    if not code.stabilizers.is_abelian():
        problems.append("S not Abelian")
    if code.gauge.is_abelian():
        problems.append("T unexpectedly Abelian")
    for name, s in zip(code.stabilizers.names, code.stabilizers):
        if not in_span(code.gauge, s):
            problems.append(f"{name} not in span(T)")
        for t in code.gauge:
            if not s.commutes(t):
                problems.append(f"{name} anticommutes with gauge {t}")
                break
        for lg in (code.logical_x, code.logical_z):
            if not s.commutes(lg):
                problems.append(f"{name} anticommutes with a logical")
    for t in code.gauge:
        for lg in (code.logical_x, code.logical_z):
            if not t.commutes(lg):
                problems.append(f"gauge {t} anticommutes with a logical")
    if code.logical_x.commutes(code.logical_z):
        problems.append("logical X and Z commute")
    recipe = stabilizer_from_gauge(code)
    for name, s in zip(code.stabilizers.names, code.stabilizers):
        prod = PauliOperator(code.n)
        for k in recipe[name]:
            prod = multiply(prod, code.gauge[k])
        if prod != s:
            problems.append(f"{name} gauge recipe gives {prod}")
    return problems
