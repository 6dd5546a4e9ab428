"""Multi-dimensional reverse reconciliation.

Bob splits his measurements into d-dimensional chunks, normalizes each one,
and publishes an orthogonal map sending the normalized chunk onto a
spherical codeword u in {+-1/sqrt(d)}^d. Alice applies the same map to her
own normalized chunk and reads soft bits off the result.

For d <= 8 the map is left multiplication in the normed division algebra of
dimension d (reals, complexes, quaternions, octonions), built by
Cayley-Dickson doubling. Above 8 no division algebra exists and the map is a
product of two Householder reflections through a canonical axis.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ReconciliationError",
    "RotationMessage",
    "check_dimension",
    "cd_conj",
    "cd_mul",
    "chunk_and_normalize",
    "spherical_word",
    "encode_rotation",
    "apply_rotation",
    "compute_llrs",
    "virtual_channel_llrs",
    "virtual_channel_fidelity",
]

DIVISION_ALGEBRA_DIMS = (1, 2, 4, 8)
_UNIT_TOL = 1e-9


class ReconciliationError(ValueError):
    """Bad dimension, degenerate chunk or non-unit input."""


def check_dimension(d: int) -> int:
    d = int(d)
    if d < 1 or d & (d - 1) or d > 1024:
        raise ReconciliationError(f"dimension must be a power of two in [1, 1024], got {d}")
    return d


def cd_conj(a: np.ndarray) -> np.ndarray:
    out = -np.asarray(a, dtype=float)
    out[..., 0] *= -1
    return out


def cd_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cayley-Dickson product along the last axis (length 1, 2, 4 or 8).

    (p, q)(r, s) = (p r - s* q, s p + q r*)
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[-1]
    if n == 1:
        return a * b
    h = n // 2
    p, q = a[..., :h], a[..., h:]
    r, s = b[..., :h], b[..., h:]
    return np.concatenate(
        [cd_mul(p, r) - cd_mul(cd_conj(s), q), cd_mul(s, p) + cd_mul(q, cd_conj(r))],
        axis=-1,
    )


def chunk_and_normalize(y: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Split ``y`` into rows of length d (remainder dropped) scaled to unit norm.

    Returns ``(unit_rows, norms)``.
    """
    d = check_dimension(d)
    y = np.asarray(y, dtype=float)
    n = y.size // d
    rows = y[: n * d].reshape(n, d)
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0):
        raise ReconciliationError("zero-norm chunk")
    return rows / norms[:, None], norms


def spherical_word(bits: np.ndarray, d: int) -> np.ndarray:
    """Map bits to rows of +-1/sqrt(d); bit 0 -> +1/sqrt(d)."""
    d = check_dimension(d)
    bits = np.asarray(bits).reshape(-1, d)
    return (1.0 - 2.0 * bits) / math.sqrt(d)


@dataclass(frozen=True)
class RotationMessage:
    """Orthogonal maps for a batch of chunks.

    ``coeffs`` holds division-algebra multipliers (d <= 8); ``w1``/``w2`` hold
    unit reflection vectors with Q = H(w2) H(w1) (d > 8). Leading axis is the
    chunk index.
    """

    d: int
    coeffs: np.ndarray | None = None
    w1: np.ndarray | None = None
    w2: np.ndarray | None = None

    def __len__(self) -> int:
        arr = self.coeffs if self.coeffs is not None else self.w1
        return arr.shape[0]

    def matrix(self, i: int = 0) -> np.ndarray:
        """Dense d x d matrix of map ``i`` (for checks, not for bulk use)."""
        eye = np.eye(self.d)
        return np.stack([apply_rotation(self._take(i), e)[0] for e in eye], axis=1)

    def _take(self, i: int) -> "RotationMessage":
        sl = slice(i, i + 1)
        if self.coeffs is not None:
            return RotationMessage(self.d, coeffs=self.coeffs[sl])
        return RotationMessage(self.d, w1=self.w1[sl], w2=self.w2[sl])

    def to_bytes(self) -> bytes:
        """Length-prefixed little-endian float64 array: [d, payload...]."""
        if self.coeffs is not None:
            payload = self.coeffs.ravel()
        else:
            payload = np.stack([self.w1, self.w2], axis=1).ravel()
        arr = np.concatenate([[float(self.d)], payload]).astype("<f8")
        return struct.pack("<Q", arr.size) + arr.tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes) -> "RotationMessage":
        (count,) = struct.unpack_from("<Q", buf, 0)
        arr = np.frombuffer(buf, dtype="<f8", count=count, offset=8)
        d = int(arr[0])
        payload = arr[1:]
        if d in DIVISION_ALGEBRA_DIMS:
            return cls(d, coeffs=payload.reshape(-1, d).copy())
        pairs = payload.reshape(-1, 2, d)
        return cls(d, w1=pairs[:, 0].copy(), w2=pairs[:, 1].copy())


def _as_rows(v: np.ndarray, d: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != d:
        raise ReconciliationError(f"expected vectors of length {d}, got shape {v.shape}")
    return v.reshape(-1, d)


def _require_unit(v: np.ndarray, name: str) -> None:
    if np.any(np.abs(np.linalg.norm(v, axis=1) - 1.0) > _UNIT_TOL):
        raise ReconciliationError(f"{name} must have unit norm")


def _reflect(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    return x - 2.0 * w * np.einsum("ij,ij->i", w, x)[:, None]


def encode_rotation(y_hat: np.ndarray, u: np.ndarray, d: int) -> RotationMessage:
    """Bob's side: orthogonal maps Q_i with Q_i y_hat_i = u_i."""
    d = check_dimension(d)
    y_hat = _as_rows(y_hat, d)
    u = _as_rows(u, d)
    _require_unit(y_hat, "y_hat")
    _require_unit(u, "u")
    if d in DIVISION_ALGEBRA_DIMS:
        # alternative algebra: (u y*) y = u |y|^2
        return RotationMessage(d, coeffs=cd_mul(u, cd_conj(y_hat)))

    # y_hat -> s e0 with s = -sign(y0) keeps |y_hat - s e0| >= sqrt(2)
    s = np.where(y_hat[:, 0] >= 0, -1.0, 1.0)
    w1 = y_hat.copy()
    w1[:, 0] -= s
    w2 = -u
    w2[:, 0] += s
    return RotationMessage(d, w1=_unit_or_zero(w1), w2=_unit_or_zero(w2))


def _unit_or_zero(w: np.ndarray) -> np.ndarray:
    # a zero vector encodes the identity reflection
    n = np.linalg.norm(w, axis=1)
    out = np.zeros_like(w)
    ok = n > 1e-12
    out[ok] = w[ok] / n[ok, None]
    return out


def apply_rotation(msg: RotationMessage, x_hat: np.ndarray) -> np.ndarray:
    """Alice's side: rows of ``Q_i x_hat_i``."""
    x_hat = _as_rows(x_hat, msg.d)
    if msg.coeffs is not None:
        return cd_mul(msg.coeffs, x_hat)
    return _reflect(msg.w2, _reflect(msg.w1, x_hat))


def compute_llrs(rotated: np.ndarray, norm_y, channel_snr: float, d: int,
                 norm_x=None) -> np.ndarray:
    """Soft bits for the virtual binary channel.

    ``LLR_i = 4 * gamma * rotated_i / sqrt(d)`` with
    ``gamma = sqrt(snr (1 + snr)) * |y| * |x| / 2``. Both norms refer to
    chunks of data standardized to unit variance per real dimension; when
    ``norm_x`` is omitted its expectation sqrt(d) is used. Positive LLR means
    bit 0.
    """
    d = check_dimension(d)
    if channel_snr <= 0:
        raise ReconciliationError("channel_snr must be > 0")
    rotated = _as_rows(rotated, d)
    ny = np.broadcast_to(np.asarray(norm_y, dtype=float).ravel(), (rotated.shape[0],))
    nx = math.sqrt(d) if norm_x is None else np.asarray(norm_x, dtype=float).ravel()
    gamma = 0.5 * math.sqrt(channel_snr * (1.0 + channel_snr)) * ny * nx
    return 4.0 * (gamma / math.sqrt(d))[:, None] * rotated


def virtual_channel_llrs(d: int, n_bits: int, snr: float, rng, constellation=None,
                         bits: np.ndarray | None = None, use_norm_x: bool = False):
    """Run the reconciliation chain on synthetic data and return (bits, LLRs).

    Alice's quadratures come from ``constellation`` (Gaussian when None), are
    sent through a real AWGN channel at per-dimension ``snr``, and both sides
    standardize to unit variance before chunking. Returns flat arrays of
    length ``n_bits`` rounded up to a multiple of d.
    """
    from .constellation import sample_symbols, to_quadratures

    d = check_dimension(d)
    n_chunks = -(-n_bits // d)
    n = n_chunks * d
    if constellation is None:
        x = rng.standard_normal(n)
    else:
        sym = sample_symbols(constellation, -(-n // 2), rng)
        x = to_quadratures(sym)[:n] / math.sqrt(constellation.variance)
    y = math.sqrt(snr) * x + rng.standard_normal(n)
    y /= math.sqrt(1.0 + snr)
    if bits is None:
        bits = rng.integers(0, 2, size=n, dtype=np.uint8)
    y_hat, ny = chunk_and_normalize(y, d)
    x_hat, nx = chunk_and_normalize(x, d)
    msg = encode_rotation(y_hat, spherical_word(bits, d), d)
    llr = compute_llrs(apply_rotation(msg, x_hat), ny, snr, d, nx if use_norm_x else None)
    return bits, llr.ravel()


def _biawgn_gmi(mu: float, order: int = 96) -> float:
    t, w = np.polynomial.hermite.hermgauss(order)
    ell = mu + math.sqrt(2.0 * mu) * math.sqrt(2.0) * t
    return float(1.0 - np.dot(w, np.logaddexp(0.0, -ell)) / math.sqrt(math.pi) / math.log(2))


def virtual_channel_fidelity(d: int, constellation, snr: float, n: int, seed,
                             use_norm_x: bool = False, bins: int = 200) -> float:
    """KL divergence (nats) of the virtual-channel LLR law from ideal BI-AWGN.

    The reference is the consistent Gaussian LLR law N(mu, 2 mu) whose
    capacity equals the empirical generalized mutual information of the
    virtual channel. Pass ``constellation=None`` for Gaussian modulation.
    """
    from scipy.optimize import brentq
    from scipy.stats import norm

    if n < 10_000:
        raise ValueError("n must be >= 1e4")
    rng = np.random.default_rng(seed)
    bits, llr = virtual_channel_llrs(d, n, snr, rng, constellation, use_norm_x=use_norm_x)
    signed = llr * (1.0 - 2.0 * bits)
    gmi = 1.0 - np.mean(np.logaddexp(0.0, -signed)) / math.log(2)
    if gmi <= 1e-6:
        return float("inf")
    mu = brentq(lambda m: _biawgn_gmi(m) - gmi, 1e-9, 400.0)
    sd = math.sqrt(2.0 * mu)
    lo, hi = mu - 6 * sd, mu + 6 * sd
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(np.clip(signed, lo, hi), bins=edges)
    p = counts / counts.sum()
    q = np.diff(norm.cdf(edges, loc=mu, scale=sd))
    q[0] += norm.cdf(lo, loc=mu, scale=sd)
    q[-1] += norm.sf(hi, loc=mu, scale=sd)
    ok = p > 0
    # Miller-Madow style bias correction for the plug-in estimate
    kl = float(np.sum(p[ok] * np.log(p[ok] / q[ok])) - (np.count_nonzero(ok) - 1) / (2 * counts.sum()))
    return max(kl, 0.0)
