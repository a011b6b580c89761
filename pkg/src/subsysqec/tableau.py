"""Stabilizer tableau with destabilizers (Aaronson-Gottesman).

Rows ``0..n-1`` are destabilizers and rows ``n..2n-1`` stabilizers. Bits are
stored as ``uint8`` arrays. Gates and measurements run in the compiled
extension when it is available; the numpy code below is the fallback and
the reference it is tested against.
"""
from __future__ import annotations

import numpy as np

from ._ext import kernels as _kernels
from .pauli import PauliOperator

__all__ = ["Tableau", "use_extension"]

_USE_EXT = _kernels is not None


def use_extension(flag: bool) -> bool:
    """Switch tableau kernels between the extension and numpy; returns the previous setting."""
    global _USE_EXT
    prev = _USE_EXT
    if flag and _kernels is None:
        raise RuntimeError("compiled kernels are not available")
    _USE_EXT = bool(flag)
    return prev


def _g_sum(x1, z1, x2, z2) -> np.ndarray:
    """Sum over qubits of the i-exponent for row products, per row (int)."""
    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    g = (
        (x1 & z1) * (z2 - x2)
        + (x1 & (1 - z1)) * (z2 * (2 * x2 - 1))
        + ((1 - x1) & z1) * (x2 * (1 - 2 * z2))
    )
    return g.sum(axis=-1, dtype=np.int64)


class Tableau:
    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        idx = np.arange(n)
        self.x[idx, idx] = 1
        self.z[n + idx, idx] = 1

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        return t

    # gates

    def h(self, q: int) -> None:
        if _USE_EXT:
            _kernels.tab_h(self.x, self.z, self.r, q)
            return
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def cnot(self, c: int, t: int) -> None:
        if _USE_EXT:
            _kernels.tab_cnot(self.x, self.z, self.r, c, t)
            return
        x, z = self.x, self.z
        self.r ^= x[:, c] & z[:, t] & (x[:, t] ^ z[:, c] ^ 1)
        x[:, t] ^= x[:, c]
        z[:, c] ^= z[:, t]

    def pauli_x(self, q: int) -> None:
        self.r ^= self.z[:, q]

    def pauli_z(self, q: int) -> None:
        self.r ^= self.x[:, q]

    def apply_pauli(self, q: int, p: str) -> None:
        if p in ("X", "Y"):
            self.pauli_x(q)
        if p in ("Z", "Y"):
            self.pauli_z(q)

    # measurement

    def _rowsum_into(self, targets: np.ndarray, i: int) -> None:
        """Replace each row ``h`` in ``targets`` by ``row_i * row_h``."""
        if targets.size == 0:
            return
        xi, zi = self.x[i], self.z[i]
        xh, zh = self.x[targets], self.z[targets]
        total = 2 * self.r[targets].astype(np.int64) + 2 * int(self.r[i]) + _g_sum(xi, zi, xh, zh)
        self.r[targets] = ((total % 4) // 2).astype(np.uint8)
        self.x[targets] = xh ^ xi
        self.z[targets] = zh ^ zi

    def measure_z(self, q: int, rng: np.random.Generator | None = None,
                  forced: int | None = None) -> tuple[int, bool]:
        """Measure Z on ``q``; returns ``(bit, was_random)``.

        Random outcomes come from ``rng`` unless ``forced`` pins them.
        """
        n = self.n
        if _USE_EXT:
            p = _kernels.tab_pivot(self.x, q)
            if p < 0:
                return self._deterministic(self.x[:n, q]), False
            bit = self._draw(rng, forced)
            _kernels.tab_collapse(self.x, self.z, self.r, q, p, bit)
            return bit, True
        hits = np.nonzero(self.x[n:, q])[0]
        if hits.size:
            p = n + int(hits[0])
            others = np.nonzero(self.x[:, q])[0]
            others = others[others != p]
            self._rowsum_into(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            bit = self._draw(rng, forced)
            self.r[p] = bit
            return bit, True
        return self._deterministic(self.x[:n, q]), False

    @staticmethod
    def _draw(rng, forced) -> int:
        if forced is not None:
            return int(forced) & 1
        return int(rng.integers(2)) if rng is not None else 0

    def _deterministic(self, selector: np.ndarray) -> int:
        if _USE_EXT:
            scratch = np.empty(self.n, dtype=np.uint8)
            return _kernels.tab_product(self.x, self.z, self.r, np.ascontiguousarray(selector),
                                        scratch, scratch.copy())
        sign, _, _ = self._product(np.nonzero(selector)[0])
        return sign

    def _product(self, rows: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
        """Sign bit and Pauli of the ordered product of the given stabilizer rows."""
        n = self.n
        if rows.size == 0:
            return 0, np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8)
        xs, zs = self.x[n + rows], self.z[n + rows]
        # each row multiplies the running product of the rows before it
        px = np.bitwise_xor.accumulate(xs, axis=0)
        pz = np.bitwise_xor.accumulate(zs, axis=0)
        prev_x = np.vstack([np.zeros((1, n), np.uint8), px[:-1]])
        prev_z = np.vstack([np.zeros((1, n), np.uint8), pz[:-1]])
        phase = 2 * int(self.r[n + rows].sum()) + int(_g_sum(xs, zs, prev_x, prev_z).sum())
        return (phase % 4) // 2, px[-1], pz[-1]

    def measure_x(self, q: int, rng=None, forced=None) -> tuple[int, bool]:
        self.h(q)
        out = self.measure_z(q, rng, forced)
        self.h(q)
        return out

    def reset(self, q: int, rng=None) -> None:
        bit, _ = self.measure_z(q, rng)
        if bit:
            self.pauli_x(q)

    # queries

    def expectation(self, x_bits: np.ndarray, z_bits: np.ndarray, negative: bool = False) -> int:
        """+1 or -1 if the Pauli is a (signed) stabilizer of the state, else 0."""
        n = self.n
        x_bits = np.asarray(x_bits, dtype=np.uint8)
        z_bits = np.asarray(z_bits, dtype=np.uint8)
        # anticommutation with the stabilizer rows means a random outcome
        anti_s = (self.x[n:] @ z_bits + self.z[n:] @ x_bits) % 2
        if anti_s.any():
            return 0
        anti_d = (self.x[:n] @ z_bits + self.z[:n] @ x_bits) % 2
        bit, sx, sz = self._product(np.nonzero(anti_d)[0])
        if not (np.array_equal(sx, x_bits) and np.array_equal(sz, z_bits)):
            raise AssertionError("stabilizer decomposition failed")
        sign = -1 if bit else 1
        return -sign if negative else sign

    def expectation_of(self, p: PauliOperator, qubits: list[int] | None = None) -> int:
        """Expectation of ``p`` whose qubit ``k`` sits on tableau column ``qubits[k]``."""
        cols = qubits if qubits is not None else list(range(p.n))
        xb = np.zeros(self.n, dtype=np.uint8)
        zb = np.zeros(self.n, dtype=np.uint8)
        for k, col in enumerate(cols):
            xb[col] = p.x >> k & 1
            zb[col] = p.z >> k & 1
        return self.expectation(xb, zb, p.negative)

    def is_valid(self) -> bool:
        """Symplectic basis check: stabilizers commute, destabilizer k pairs with stabilizer k only."""
        n = self.n
        form = (self.x.astype(np.int64) @ self.z.T.astype(np.int64)
                + self.z.astype(np.int64) @ self.x.T.astype(np.int64)) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[np.arange(n), n + np.arange(n)] = 1
        expected[n + np.arange(n), np.arange(n)] = 1
        return bool(np.array_equal(form, expected))
