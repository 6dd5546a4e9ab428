"""Frame verification with a 64-bit Toeplitz universal hash.

For a uniformly random Toeplitz matrix T (64 x n over GF(2)) the digests of two
distinct inputs collide with probability exactly 2^-64.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["ProtocolError", "DIGEST_BITS", "toeplitz_digest", "verify"]

DIGEST_BITS = 64
DEFAULT_HASH_SEED = 0x5EED_CAFE


class ProtocolError(ValueError):
    pass


@lru_cache(maxsize=16)
def _toeplitz_rows(n: int, seed: int) -> np.ndarray:
    r = np.random.default_rng(seed).integers(0, 2, n + DIGEST_BITS - 1).astype(np.float32)
    # row i is r[i:i+n]: a Hankel matrix, i.e. Toeplitz with columns reversed,
    # which leaves the universal-hash guarantee unchanged
    return sliding_window_view(r, n)[:DIGEST_BITS]


def toeplitz_digest(bits: np.ndarray, seed: int = DEFAULT_HASH_SEED):
    """64-bit digest of a bit vector, or an array of digests for a (batch, n) array."""
    b = np.asarray(bits)
    single = b.ndim == 1
    b = np.atleast_2d(b)
    n = b.shape[-1]
    if n >= 1 << 24:
        raise ProtocolError("input too long for exact float32 accumulation")
    rows = _toeplitz_rows(n, seed)
    parity = (b.astype(np.float32) @ rows.T).astype(np.int64) & 1
    words = np.packbits(parity.astype(np.uint8), axis=1, bitorder="little").view("<u8")[:, 0]
    return int(words[0]) if single else words


def verify(s: np.ndarray, s_hat: np.ndarray, seed: int = DEFAULT_HASH_SEED) -> bool:
    """True when the 64-bit digests of ``s`` and ``s_hat`` agree."""
    s, s_hat = np.asarray(s).ravel(), np.asarray(s_hat).ravel()
    if s.size != s_hat.size:
        raise ProtocolError(f"length mismatch: {s.size} vs {s_hat.size}")
    return toeplitz_digest(s, seed) == toeplitz_digest(s_hat, seed)
