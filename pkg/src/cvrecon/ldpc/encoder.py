"""Systematic encoding through Gaussian elimination over GF(2)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = ["EncoderError", "SystematicEncoder", "gf2_rref"]


class EncoderError(RuntimeError):
    """Parity-check matrix is rank deficient."""


def _pack(dense: np.ndarray) -> np.ndarray:
    m, n = dense.shape
    width = -(-n // 64) * 64
    padded = np.zeros((m, width), dtype=np.uint8)
    padded[:, :n] = dense
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64)


def _unpack(words: np.ndarray, n: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")[:, :n]


def gf2_rref(h, column_order=None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of a binary matrix.

    Columns are scanned in ``column_order`` (default: right to left) so that
    pivots land on the trailing parity part when it is invertible. Returns the
    packed reduced rows (one per pivot) and the pivot columns.
    """
    dense = h.toarray() if sp.issparse(h) else np.asarray(h)
    dense = (dense % 2).astype(np.uint8)
    m, n = dense.shape
    words = _pack(dense)
    if column_order is None:
        column_order = range(n - 1, -1, -1)
    active = np.ones(m, dtype=bool)
    pivot_rows, pivot_cols = [], []
    one = np.uint64(1)
    for col in column_order:
        w, b = divmod(col, 64)
        bit = (words[:, w] >> np.uint64(b)) & one
        cand = np.flatnonzero(active & (bit == one))
        if cand.size == 0:
            continue
        r = cand[0]
        hits = np.flatnonzero(bit == one)
        hits = hits[hits != r]
        words[hits] ^= words[r]
        active[r] = False
        pivot_rows.append(r)
        pivot_cols.append(col)
        if len(pivot_rows) == m:
            break
    return words[pivot_rows], pivot_cols


@dataclass(frozen=True)
class SystematicEncoder:
    n: int
    info_positions: np.ndarray     # sorted
    parity_positions: np.ndarray   # pivot columns, aligned with rows of ``generator``
    generator: np.ndarray          # parity = generator @ info (mod 2), uint8

    @property
    def k(self) -> int:
        return self.info_positions.size

    @classmethod
    def from_code(cls, code) -> "SystematicEncoder":
        h = code.parity_check
        rows, pivots = gf2_rref(h)
        m, n = h.shape
        if len(pivots) < m:
            raise EncoderError(
                f"parity-check matrix has rank {len(pivots)} < {m}; rebuild with another seed"
            )
        dense = _unpack(rows, n)
        pivots = np.asarray(pivots)
        info = np.setdiff1d(np.arange(n), pivots)
        return cls(n, info, pivots, np.ascontiguousarray(dense[:, info]))

    def encode(self, info_bits: np.ndarray) -> np.ndarray:
        """Codeword(s) for one info vector or a (batch, k) array."""
        bits = np.asarray(info_bits, dtype=np.uint8)
        if bits.shape[-1] != self.k:
            raise ValueError(f"expected {self.k} information bits, got {bits.shape[-1]}")
        single = bits.ndim == 1
        bits = np.atleast_2d(bits)
        out = np.zeros((bits.shape[0], self.n), dtype=np.uint8)
        out[:, self.info_positions] = bits
        # float32 matmul is exact for these sizes and far faster than integer
        par = (bits.astype(np.float32) @ self.generator.T.astype(np.float32)).astype(np.int64) & 1
        out[:, self.parity_positions] = par
        return out[0] if single else out
