"""Syndrome reconstruction, repetition majority and repetition-code decoding.

Z errors are located along rows (the X-type stabilizers compare adjacent
rows) and corrected on column 1; X errors are located along columns and
corrected on row 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

from .code import SubsystemCode
from .pauli import PauliOperator

__all__ = [
    "MissingRegisters",
    "SyndromeRecord",
    "agreeing_bits",
    "decode",
    "decode_sets",
    "decoder_table",
    "majority_bits",
    "reconstruct",
]


class MissingRegisters(KeyError):
    pass


@dataclass(frozen=True)
class SyndromeRecord:
    error_type: str  # "Z" (from X-type stabilizers) or "X"
    bits: tuple[int, ...]
    consistency: tuple[int, ...] = ()  # one bit per redundant cycle check, 0 when consistent
    raw: Mapping = field(default_factory=dict, compare=False)


def reconstruct(error_type: str, outcomes: Mapping[tuple[int, int], int], length: int,
                cells: Sequence[int] = ()) -> SyndromeRecord:
    """Stabilizer bits from the pair-gauge outcomes of one round.

    ``outcomes[(a, c)]`` is the outcome of pair ``(a, a+1)`` in cell ``c``
    (a column for Z-type errors, a row for X-type), and ``outcomes[(0, c)]``
    the optional redundant closing pair. ``length`` is the number of
    stabilizer bits; bit ``a`` is the XOR over cells of pair ``a``. Each cell
    with a closing pair contributes a consistency bit, 0 when the cycle of
    pair outcomes multiplies to the identity.
    """
    cells = sorted({c for (_, c) in outcomes}) if not cells else list(cells)
    if length < 1:
        raise ValueError("a syndrome has at least one bit")
    bits = []
    for a in range(1, length + 1):
        acc = 0
        for c in cells:
            try:
                acc ^= outcomes[(a, c)]
            except KeyError:
                raise MissingRegisters(f"no outcome for pair {a} in cell {c}") from None
        bits.append(acc)
    consistency = []
    for c in cells:
        if (0, c) in outcomes:
            acc = outcomes[(0, c)]
            for a in range(1, length + 1):
                acc ^= outcomes[(a, c)]
            consistency.append(acc)
    return SyndromeRecord(error_type, tuple(bits), tuple(consistency), dict(outcomes))


def majority_bits(records: Sequence[SyndromeRecord]) -> SyndromeRecord:
    r = len(records)
    if r % 2 == 0:
        raise ValueError(f"majority over an even number of rounds ({r})")
    et = records[0].error_type
    width = len(records[0].bits)
    bits = tuple(int(2 * sum(rec.bits[k] for rec in records) > r) for k in range(width))
    return SyndromeRecord(et, bits)


def agreeing_bits(records: Sequence[SyndromeRecord]) -> SyndromeRecord:
    """Syndrome of the first two consecutive rounds that agree, else of the last round.

    Unlike a per-bit majority this cannot be fooled by one data fault that
    lands partway through a round: the rounds then read clean, partial and
    full, and the partial one never agrees with a neighbour.
    """
    r = len(records)
    if r % 2 == 0:
        raise ValueError(f"vote over an even number of rounds ({r})")
    for k in range(r - 1):
        if records[k].bits == records[k + 1].bits:
            return SyndromeRecord(records[k].error_type, records[k].bits)
    return SyndromeRecord(records[-1].error_type, records[-1].bits)


@lru_cache(maxsize=None)
def decode_sets(length: int, syndrome: tuple[int, ...]) -> tuple[int, ...]:
    """Smaller of the two line sets whose boundaries match ``syndrome``.

    Lines are numbered 1..``length``; syndrome bit ``k`` marks a boundary
    between lines ``k`` and ``k+1``. Odd ``length`` rules out ties.
    """
    if len(syndrome) != length - 1:
        raise ValueError(f"syndrome of length {len(syndrome)} for {length} lines")
    flips = [0]
    for b in syndrome:
        flips.append(flips[-1] ^ (b & 1))
    chosen = [k + 1 for k, f in enumerate(flips) if f]
    if 2 * len(chosen) > length:
        chosen = [k + 1 for k, f in enumerate(flips) if not f]
    return tuple(chosen)


def decode(code: SubsystemCode, error_type: str, syndrome: Sequence[int]) -> PauliOperator:
    """Correction for a syndrome: Z on ``(i, 1)`` per chosen row, or X on ``(1, j)`` per column."""
    syndrome = tuple(int(b) for b in syndrome)
    if error_type == "Z":
        rows = decode_sets(code.n1, syndrome)
        return PauliOperator.from_sites(code.n, "Z", [code.q(i, 1) for i in rows])
    if error_type == "X":
        cols = decode_sets(code.n2, syndrome)
        return PauliOperator.from_sites(code.n, "X", [code.q(1, j) for j in cols])
    raise ValueError(f"error type must be 'Z' or 'X', got {error_type!r}")


def decoder_table(length: int, line: int) -> tuple[int, ...]:
    """Truth table: does ``line`` get corrected, indexed by the packed syndrome."""
    w = length - 1
    table = []
    for idx in range(1 << w):
        syn = tuple(idx >> k & 1 for k in range(w))
        table.append(int(line in decode_sets(length, syn)))
    return tuple(table)
