"""Signed Pauli operators over GF(2) with bit-packed x/z parts.

Qubits are addressed by a linear index. For grid codes the index of the
site ``(row, col)`` (both 1-based) is ``(row - 1) * n2 + (col - 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

__all__ = [
    "CapacityError",
    "DimensionError",
    "GeneratorSet",
    "GridIndex",
    "PauliOperator",
    "commutes",
    "in_span",
    "min_weight_coset",
    "multiply",
]

# Largest basis enumerated exhaustively by min_weight_coset.
MAX_ENUMERATION_RANK = 24


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class CapacityError(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True, order=True)
class GridIndex:
    row: int
    col: int

    def linear(self, n2: int) -> int:
        return (self.row - 1) * n2 + (self.col - 1)

    @classmethod
    def from_linear(cls, index: int, n2: int) -> "GridIndex":
        return cls(index // n2 + 1, index % n2 + 1)

    def check(self, n1: int, n2: int) -> None:
        if not (1 <= self.row <= n1 and 1 <= self.col <= n2):
            raise IndexError(f"site {self} outside a {n1}x{n2} grid")


def _popcount(v: int) -> int:
    return v.bit_count()


def _phase_exponent(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent k (mod 4) such that P1 P2 = i^k P3 for unsigned Paulis.

    Uses the per-site rule of Aaronson and Gottesman, counted with popcounts
    over the packed words instead of site by site.
    """
    plus = (x1 & z1 & ~x2 & z2) | (x1 & ~z1 & x2 & z2) | (~x1 & z1 & x2 & ~z2)
    minus = (x1 & z1 & x2 & ~z2) | (x1 & ~z1 & ~x2 & z2) | (~x1 & z1 & x2 & z2)
    return (_popcount(plus) - _popcount(minus)) % 4


@dataclass(frozen=True)
class PauliOperator:
    """``sign * P_0 (x) ... (x) P_{n-1}`` with ``(x, z) = (1, 1)`` meaning Y."""

    n: int
    x: int = 0
    z: int = 0
    negative: bool = False

    def __post_init__(self) -> None:
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise DimensionError(f"bits set beyond qubit {self.n - 1}")

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n)

    @classmethod
    def from_sites(cls, n: int, kind: str, sites: Iterable[int]) -> "PauliOperator":
        bits = 0
        for q in sites:
            if not 0 <= q < n:
                raise IndexError(f"qubit {q} outside 0..{n - 1}")
            bits ^= 1 << q
        kind = kind.upper()
        if kind == "X":
            return cls(n, x=bits)
        if kind == "Z":
            return cls(n, z=bits)
        if kind == "Y":
            return cls(n, x=bits, z=bits)
        raise ValueError(f"unknown Pauli kind {kind!r}")

    @classmethod
    def from_string(cls, s: str) -> "PauliOperator":
        """Parse a dense label such as ``"-XIZY"`` (qubit 0 first)."""
        negative = s.startswith("-")
        s = s.lstrip("+-")
        x = z = 0
        for q, ch in enumerate(s):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
            if ch not in "IXYZ_":
                raise ValueError(f"bad Pauli character {ch!r}")
        return cls(len(s), x, z, negative)

    @property
    def sign(self) -> int:
        return -1 if self.negative else 1

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def support(self) -> list[int]:
        v = self.x | self.z
        return [q for q in range(self.n) if v >> q & 1]

    def is_identity(self, ignore_sign: bool = True) -> bool:
        return self.x == 0 and self.z == 0 and (ignore_sign or not self.negative)

    def is_z_type(self) -> bool:
        return self.x == 0

    def is_x_type(self) -> bool:
        return self.z == 0

    def unsigned(self) -> "PauliOperator":
        return PauliOperator(self.n, self.x, self.z)

    def __neg__(self) -> "PauliOperator":
        return PauliOperator(self.n, self.x, self.z, not self.negative)

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return multiply(self, other)

    def commutes(self, other: "PauliOperator") -> bool:
        return commutes(self, other)

    def label(self) -> str:
        chars = []
        for q in range(self.n):
            chars.append("IXZY"[(self.x >> q & 1) | (self.z >> q & 1) << 1])
        return ("-" if self.negative else "") + "".join(chars)

    def grid_label(self, n2: int) -> str:
        """Sparse listing like ``X(1,1) X(1,2)`` for grid layouts."""
        parts = []
        for q in self.support:
            site = GridIndex.from_linear(q, n2)
            ch = "IXZY"[(self.x >> q & 1) | (self.z >> q & 1) << 1]
            parts.append(f"{ch}({site.row},{site.col})")
        body = " ".join(parts) if parts else "I"
        return ("-" if self.negative else "") + body

    def __str__(self) -> str:
        return self.label()


def _check_dims(a: PauliOperator, b: PauliOperator) -> None:
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")


def commutes(a: PauliOperator, b: PauliOperator) -> bool:
    _check_dims(a, b)
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


def multiply(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Product ``a * b``; raises if the result would carry a factor of +-i."""
    _check_dims(a, b)
    k = _phase_exponent(a.x, a.z, b.x, b.z)
    if k % 2:
        raise ValueError(
            f"product of anticommuting operators {a} * {b} is not Hermitian"
        )
    negative = a.negative ^ b.negative ^ (k == 2)
    return PauliOperator(a.n, a.x ^ b.x, a.z ^ b.z, negative)


def _phase_product(a: PauliOperator, b: PauliOperator, phase: int) -> tuple[PauliOperator, int]:
    # Tracks the full i-exponent; used where intermediate products may be
    # non-Hermitian (products of non-Abelian generators).
    k = _phase_exponent(a.x, a.z, b.x, b.z)
    k = (k + phase + 2 * a.negative + 2 * b.negative) % 4
    return PauliOperator(a.n, a.x ^ b.x, a.z ^ b.z), k


@dataclass(frozen=True)
class GeneratorSet:
    generators: tuple[PauliOperator, ...]
    n: int
    names: tuple[str, ...] = field(default=(), compare=False)

    def __init__(
        self,
        generators: Sequence[PauliOperator],
        n: int | None = None,
        names: Sequence[str] = (),
        abelian: bool = False,
    ):
        gens = tuple(generators)
        if n is None:
            if not gens:
                raise ValueError("n is required for an empty generator set")
            n = gens[0].n
        for g in gens:
            if g.n != n:
                raise DimensionError(f"generator {g} is not on {n} qubits")
        if names and len(names) != len(gens):
            raise ValueError("one name per generator")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "names", tuple(names))
        if abelian and not self.is_abelian():
            raise ValueError("generator set flagged Abelian has anticommuting pairs")

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __getitem__(self, i: int) -> PauliOperator:
        return self.generators[i]

    def is_abelian(self) -> bool:
        return all(commutes(a, b) for a, b in combinations(self.generators, 2))

    def anticommuting_pair(self) -> tuple[int, int] | None:
        for i, j in combinations(range(len(self.generators)), 2):
            if not commutes(self.generators[i], self.generators[j]):
                return i, j
        return None

    def restricted(self, kind: str) -> "GeneratorSet":
        """Sub-list of generators that are purely X-type or purely Z-type."""
        keep = [
            (g, nm)
            for g, nm in zip(self.generators, self.names or [""] * len(self))
            if (kind == "Z" and g.is_z_type()) or (kind == "X" and g.is_x_type())
        ]
        return GeneratorSet(
            [g for g, _ in keep], self.n, [nm for _, nm in keep] if self.names else ()
        )

    def union(self, other: "GeneratorSet") -> "GeneratorSet":
        names = self.names + other.names if self.names and other.names else ()
        return GeneratorSet(self.generators + other.generators, self.n, names)

    def basis(self) -> list[tuple[int, int, PauliOperator, int]]:
        """Reduced row-echelon basis as ``(pivot, vector, operator, i-phase)``."""
        return _echelon(self.generators, self.n)

    def rank(self) -> int:
        return len(self.basis())


def _vector(p: PauliOperator, n: int) -> int:
    return (p.x << n) | p.z


def _echelon(gens: Iterable[PauliOperator], n: int):
    rows: list[tuple[int, int, PauliOperator, int]] = []
    for g in gens:
        vec = _vector(g, n)
        op, phase = g.unsigned(), 2 * g.negative
        for pivot, rvec, rop, rphase in rows:
            if vec >> pivot & 1:
                vec ^= rvec
                op, phase = _phase_product(op, PauliOperator(n, rop.x, rop.z), phase + rphase)
        if vec:
            pivot = vec.bit_length() - 1
            # keep rows fully reduced so membership tests are one pass
            new_rows = []
            for rpivot, rvec, rop, rphase in rows:
                if rvec >> pivot & 1:
                    rop2, rphase2 = _phase_product(rop, op, rphase + phase)
                    new_rows.append((rpivot, rvec ^ vec, rop2, rphase2))
                else:
                    new_rows.append((rpivot, rvec, rop, rphase))
            rows = new_rows + [(pivot, vec, op, phase)]
            rows.sort(key=lambda r: -r[0])
    return rows


def in_span(gens: GeneratorSet, p: PauliOperator, ignore_sign: bool = True) -> bool:
    """True iff ``p`` (up to sign when ``ignore_sign``) is a product of ``gens``.

    For a non-Abelian set -I is itself in the group, so the sign never
    matters there.
    """
    _check_dims(PauliOperator(gens.n), p)
    vec = _vector(p, gens.n)
    op, phase = PauliOperator(gens.n), 0
    for pivot, rvec, rop, rphase in gens.basis():
        if vec >> pivot & 1:
            vec ^= rvec
            op, phase = _phase_product(op, rop, phase + rphase)
    if vec:
        return False
    if ignore_sign or not gens.is_abelian():
        return True
    if phase % 2:
        raise ValueError("i-phase in a product of commuting generators")
    return (phase == 2) == p.negative


def min_weight_coset(gens: GeneratorSet, representative: PauliOperator, restrict: str = "any") -> int:
    """Minimum weight over ``representative * span(gens)`` by exhaustive enumeration.

    ``restrict`` is ``"Z"``, ``"X"`` or ``"any"``; restricted modes only use the
    generators of that type. Enumeration walks the span in Gray-code order.
    """
    restrict = restrict.upper()
    if restrict in ("Z", "X"):
        gens = gens.restricted(restrict)
    elif restrict != "ANY":
        raise ValueError(f"unknown restriction {restrict!r}")
    elif gens.n > 10:
        raise CapacityError(f"unrestricted enumeration limited to n <= 10, got {gens.n}")
    _check_dims(PauliOperator(gens.n), representative)
    basis = [(rop.x, rop.z) for _, _, rop, _ in gens.basis()]
    if len(basis) > MAX_ENUMERATION_RANK:
        raise CapacityError(f"span of rank {len(basis)} exceeds 2^{MAX_ENUMERATION_RANK} products")
    x, z = representative.x, representative.z
    best = _popcount(x | z)
    for i in range(1, 1 << len(basis)):
        bx, bz = basis[(i & -i).bit_length() - 1]
        x ^= bx
        z ^= bz
        w = _popcount(x | z)
        if w < best:
            best = w
    return best
