"""Probabilistically shaped square QAM in shot-noise units.

Points carry Maxwell-Boltzmann probabilities ``p ~ exp(-nu * |a|^2)`` where
``a`` runs over the *unnormalized* odd-integer grid (+-1, +-3, ...). The grid
is then scaled so that the ensemble second moment per complex symbol equals
the requested modulation variance.
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

__all__ = [
    "ConstellationError",
    "ShapedConstellation",
    "build_ps_qam",
    "sample_symbols",
    "to_quadratures",
    "shaped_mutual_information",
    "shaping_penalty",
    "default_nu",
    "write_constellation_csv",
]


class ConstellationError(ValueError):
    """Invalid constellation order or degenerate shaping."""


@dataclass(frozen=True)
class ShapedConstellation:
    points: np.ndarray          # complex, scaled so sum(p |points|^2) == variance
    probabilities: np.ndarray
    nu: float                   # shaping rate on the unnormalized odd-integer grid
    order: int
    variance: float

    @property
    def scale(self) -> float:
        """Factor mapping the odd-integer grid onto ``points``."""
        return float(np.abs(self.points).max() / (math.isqrt(self.order) - 1) / math.sqrt(2))

    def pam(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis amplitudes and marginal probabilities (the MB law factorizes)."""
        m = math.isqrt(self.order)
        levels = np.arange(-(m - 1), m, 2, dtype=float)
        logp = -self.nu * levels**2
        return levels * self.scale, np.exp(logp - logsumexp(logp))


def _check_order(order: int) -> int:
    root = math.isqrt(order) if order > 0 else 0
    if order < 4 or root * root != order or root % 2:
        raise ConstellationError(
            f"order must be a perfect square with an even root (4, 16, 64, 256, ...), got {order}"
        )
    return root


def build_ps_qam(order: int, nu: float, target_variance: float) -> ShapedConstellation:
    root = _check_order(order)
    if nu < 0:
        raise ConstellationError(f"nu must be >= 0, got {nu}")
    if not target_variance > 0:
        raise ConstellationError(f"target_variance must be > 0, got {target_variance}")

    levels = np.arange(-(root - 1), root, 2, dtype=float)
    grid = (levels[None, :] + 1j * levels[:, None]).ravel()
    energy = np.abs(grid) ** 2
    logp = -nu * energy
    probs = np.exp(logp - logsumexp(logp))
    # the four innermost points always tie, so collapse shows up as underflow
    # of the outer points rather than as a single surviving point
    if np.count_nonzero(probs) < probs.size:
        raise ConstellationError(
            f"nu={nu} underflows the outer-point probabilities to zero (degenerate shaping)"
        )
    probs /= probs.sum()

    raw_var = float(np.dot(probs, energy))
    points = grid * math.sqrt(target_variance / raw_var)
    return ShapedConstellation(points, probs, float(nu), order, float(target_variance))


def sample_symbols(c: ShapedConstellation, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. complex symbols; ``seed`` may be an int or a Generator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    # sampling each axis from its marginal is equivalent and cheaper
    amps, pm = c.pam()
    i = rng.choice(amps.size, size=n, p=pm)
    q = rng.choice(amps.size, size=n, p=pm)
    return amps[i] + 1j * amps[q]


def to_quadratures(symbols: np.ndarray) -> np.ndarray:
    """Interleave (Re, Im, Re, Im, ...) with each quadrature carrying variance V_A.

    A complex symbol with ``E|s|^2 = V_A`` has ``V_A/2`` per axis; the sqrt(2)
    maps that onto the SNU quadrature convention used by the channel model.
    """
    s = np.asarray(symbols)
    out = np.empty(2 * s.size)
    out[0::2] = s.real
    out[1::2] = s.imag
    return out * math.sqrt(2.0)


def _pam_mutual_information(amps: np.ndarray, probs: np.ndarray, noise_var: float,
                            order: int = 96) -> float:
    """I(X;Y) in bits for y = x + n, n ~ N(0, noise_var), by Gauss-Hermite."""
    t, w = np.polynomial.hermite.hermgauss(order)
    z = math.sqrt(2.0 * noise_var) * t                      # noise samples
    diff = amps[:, None] - amps[None, :]                    # a_i - a_j
    # exponent: -((a_i - a_j + z)^2 - z^2) / (2 s2)
    expo = -(diff[:, :, None] ** 2 + 2 * diff[:, :, None] * z[None, None, :]) / (2 * noise_var)
    lse = logsumexp(expo, axis=1, b=probs[None, :, None])   # shape (i, k)
    h = np.dot(lse, w) / math.sqrt(math.pi)
    return float(-np.dot(probs, h) / math.log(2))


def shaped_mutual_information(c: ShapedConstellation, snr: float, order: int = 96) -> float:
    """Mutual information (bits per complex symbol) of ``c`` over complex AWGN at ``snr``."""
    if snr <= 0:
        return 0.0
    amps, pm = c.pam()
    noise_var = c.variance / (2.0 * snr)
    return 2.0 * _pam_mutual_information(amps, pm, noise_var, order)


def shaping_penalty(c: ShapedConstellation, snr: float) -> float:
    """Gaussian capacity minus the constellation's mutual information."""
    return math.log2(1.0 + snr) - shaped_mutual_information(c, snr)


@functools.lru_cache(maxsize=None)
def default_nu(order: int = 256, snr: float = 0.25) -> float:
    """Shaping rate minimizing the mutual-information penalty at ``snr``.

    Raises if the best achievable penalty is not below 0.01 bit.
    """
    _check_order(order)
    root = math.isqrt(order)
    # beyond this the outermost ring carries negligible mass
    upper = 40.0 / (root - 1) ** 2

    def penalty(nu):
        return shaping_penalty(build_ps_qam(order, nu, 1.0), snr)

    res = minimize_scalar(penalty, bounds=(0.0, upper), method="bounded",
                          options={"xatol": 1e-6})
    if res.fun >= 0.01:
        raise ConstellationError(
            f"no shaping rate reaches a penalty below 0.01 bit at snr={snr} (best {res.fun:.4g})"
        )
    return float(res.x)


def write_constellation_csv(c: ShapedConstellation, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "prob"])
        for pt, p in zip(c.points, c.probabilities):
            w.writerow([repr(float(pt.real)), repr(float(pt.imag)), repr(float(p))])
    return path
