"""Key-rate ingredients for heterodyne CV-QKD with reverse reconciliation.

Conventions (shot-noise units, per complex symbol unless stated):

* Alice's modulation variance ``V_A`` per quadrature, ``V = V_A + 1``.
* Eve controls a channel of transmittance ``T`` and input-referred excess
  noise ``xi``; the receiver efficiency ``eta`` and electronic noise
  ``v_el`` are trusted.
* Each heterodyne output quadrature sees signal ``eta T V_A / 2`` on top of
  noise ``1 + eta T xi / 2 + v_el``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

__all__ = [
    "PhysicalityError",
    "SecurityParams",
    "RateReport",
    "RATE_CSV_COLUMNS",
    "snr_of",
    "mutual_information",
    "entropy_g",
    "symplectic_eigenvalues",
    "symplectic_spectrum",
    "holevo_bound",
    "worst_case_parameters",
    "finite_size_chi",
    "skr",
]

PAPER_SYMBOL_RATE = 250e6
_OMEGA2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class PhysicalityError(ValueError):
    """Covariance matrix violates the uncertainty principle."""


@dataclass(frozen=True)
class SecurityParams:
    V_A: float = 7.44
    eta: float = 0.4
    xi: float = 0.0045
    v_el: float = 0.1
    block_size: int = 6_800_000
    epsilon_pe: float = 1e-10

    def __post_init__(self):
        if not self.V_A > 0:
            raise ValueError("V_A must be > 0")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        if self.xi < 0 or self.v_el < 0:
            raise ValueError("xi and v_el must be >= 0")
        if not 0 < self.epsilon_pe < 1:
            raise ValueError("epsilon_pe must be in (0, 1)")

    def with_(self, **kw) -> "SecurityParams":
        from dataclasses import replace
        return replace(self, **kw)


def snr_of(p: SecurityParams, T: float, xi: float | None = None) -> float:
    xi = p.xi if xi is None else xi
    return (p.eta * T * p.V_A / 2.0) / (1.0 + p.eta * T * xi / 2.0 + p.v_el)


def mutual_information(p: SecurityParams, T: float, constellation=None,
                       per_quadrature: bool = False, xi: float | None = None) -> float:
    """I_AB in bits per complex symbol (or per real quadrature).

    With a ``constellation`` the discrete-input mutual information replaces
    the Gaussian one.
    """
    snr = snr_of(p, T, xi)
    if constellation is None:
        i_ab = math.log2(1.0 + snr)
    else:
        from .constellation import shaped_mutual_information
        i_ab = shaped_mutual_information(constellation, snr)
    return i_ab / 2.0 if per_quadrature else i_ab


def entropy_g(x):
    """g(x) = (x+1) log2(x+1) - x log2 x, the thermal-state entropy."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    small = x < 1e-12
    xs = x[small]
    # g(x) ~ x (1 - ln x) / ln 2 for x -> 0
    out[small] = np.where(xs > 0, xs * (1.0 - np.log(np.where(xs > 0, xs, 1.0))), 0.0) / math.log(2)
    xb = x[~small]
    out[~small] = (xb + 1) * np.log2(xb + 1) - xb * np.log2(xb)
    return out if out.ndim else float(out)


def _omega(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), _OMEGA2)


def _check_cov(cov) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise ValueError(f"covariance must be square with even size, got {cov.shape}")
    if not np.allclose(cov, cov.T, atol=1e-10, rtol=0):
        raise ValueError("covariance matrix is not symmetric")
    return 0.5 * (cov + cov.T)


def symplectic_eigenvalues(cov) -> tuple[float, float]:
    """Symplectic eigenvalues (nu1 >= nu2) of a two-mode covariance matrix."""
    cov = _check_cov(cov)
    if cov.shape != (4, 4):
        raise ValueError("two-mode (4x4) covariance expected; use symplectic_spectrum")
    nu1, nu2 = symplectic_spectrum(cov)
    return float(nu1), float(nu2)


def symplectic_spectrum(cov) -> np.ndarray:
    """All symplectic eigenvalues of an n-mode covariance, descending.

    Eigenvalues of -(Omega V)^2 are the squared symplectic eigenvalues, each
    appearing twice.
    """
    cov = _check_cov(cov)
    n = cov.shape[0] // 2
    m = _omega(n) @ cov
    ev = np.sort(np.real(np.linalg.eigvals(-(m @ m))))[::-1]
    nus = np.sqrt(np.clip(ev[0::2], 0.0, None))
    _check_physical(nus)
    return nus


def _check_physical(nus, tol: float = 1e-9) -> None:
    if min(nus) < 1.0 - tol:
        raise PhysicalityError(f"symplectic eigenvalue {min(nus):.12g} < 1")


def _entropy(nus) -> float:
    return float(np.sum(entropy_g((np.asarray(nus) - 1.0) / 2.0)))


def _two_mode(a: float, b: float, c: float) -> np.ndarray:
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    return np.block([[a * eye, c * z], [c * z, b * eye]])


def holevo_bound(p: SecurityParams, T: float, xi: float | None = None) -> float:
    """Eve's Holevo information on Bob's heterodyne data (bits per symbol).

    Entangling-cloner purification of the Alice-Bob state; the detector is a
    beam splitter of transmittance eta mixing Bob's mode with one arm of an
    EPR pair whose variance reproduces the electronic noise.
    """
    xi = p.xi if xi is None else xi
    if not 0 < T <= 1:
        raise ValueError(f"T must be in (0, 1], got {T}")
    V = p.V_A + 1.0
    b = T * (V - 1.0 + xi) + 1.0
    c = math.sqrt(T * (V * V - 1.0))
    gamma_ab = _two_mode(V, b, c)
    s_ab = _entropy(symplectic_eigenvalues(gamma_ab))

    eta = p.eta
    if eta >= 1.0:
        if p.v_el > 0:
            raise ValueError("eta = 1 leaves no port for electronic noise")
        cond = _condition_heterodyne(gamma_ab, keep=[0, 1], meas=[2, 3])
        return s_ab - _entropy(symplectic_spectrum(cond))

    v = 1.0 + 2.0 * p.v_el / (1.0 - eta)
    cfg = math.sqrt(v * v - 1.0)
    # mode order: A, B, F, G
    full = np.zeros((8, 8))
    full[:4, :4] = gamma_ab
    full[4:, 4:] = _two_mode(v, v, cfg)
    t, r = math.sqrt(eta), math.sqrt(1.0 - eta)
    bs = np.eye(8)
    eye = np.eye(2)
    bs[2:4, 2:4], bs[2:4, 4:6] = t * eye, r * eye       # B' = t B + r F
    bs[4:6, 2:4], bs[4:6, 4:6] = -r * eye, t * eye      # F' = -r B + t F
    full = bs @ full @ bs.T
    cond = _condition_heterodyne(full, keep=[0, 1, 4, 5, 6, 7], meas=[2, 3])
    return s_ab - _entropy(symplectic_spectrum(cond))


def _condition_heterodyne(cov: np.ndarray, keep, meas) -> np.ndarray:
    a = cov[np.ix_(keep, keep)]
    b = cov[np.ix_(meas, meas)]
    c = cov[np.ix_(keep, meas)]
    return a - c @ np.linalg.solve(b + np.eye(len(meas)), c.T)


def worst_case_parameters(p: SecurityParams, T_hat: float, xi_hat: float,
                          n_used: float) -> tuple[float, float] | None:
    """Pessimistic (T, xi) at confidence epsilon_pe, or None if no key is possible.

    Per quadrature the model is y = a x + z with a = sqrt(eta T / 2); the
    slope and noise estimators over m = 2 n_used samples have standard
    deviations sqrt(s2 / (m V_A)) and s2 sqrt(2 / m) (known shot noise).
    """
    z = norm.isf(p.epsilon_pe / 2.0)
    m = 2.0 * n_used
    a = math.sqrt(p.eta * T_hat / 2.0)
    s2 = 1.0 + p.eta * T_hat * xi_hat / 2.0 + p.v_el
    a_min = a - z * math.sqrt(s2 / (m * p.V_A))
    s2_max = s2 + z * s2 * math.sqrt(2.0 / m)
    if a_min <= 0:
        return None
    T_min = 2.0 * a_min * a_min / p.eta
    xi_max = 2.0 * (s2_max - 1.0 - p.v_el) / (p.eta * T_min)
    if T_min > 1.0 or xi_max < 0:
        T_min, xi_max = min(T_min, 1.0), max(xi_max, 0.0)
    return T_min, xi_max


def finite_size_chi(p: SecurityParams, T_hat: float, xi_hat: float, n_used: float) -> float:
    """Holevo bound at worst-case parameters; ``inf`` marks "no key"."""
    if n_used < 1e4:
        raise ValueError("n_used must be >= 1e4")
    wc = worst_case_parameters(p, T_hat, xi_hat, n_used)
    if wc is None:
        return math.inf
    try:
        return holevo_bound(p, *wc)
    except PhysicalityError:
        return math.inf


RATE_CSV_COLUMNS = ("sigma_I", "beta_jitter", "T_hat", "xi_hat", "I_AB", "chi_BE", "beta",
                    "fer", "skr_bits_per_symbol", "skr_bits_per_s")


@dataclass(frozen=True)
class RateReport:
    I_AB: float
    chi_BE: float
    beta: float
    fer: float
    skr: float                  # bits per symbol, clamped at 0
    skr_bits_per_s: float
    positive: bool
    context: dict = field(default_factory=dict, compare=False)

    @property
    def raw(self) -> float:
        """Unclamped (1 - FER)(beta I_AB - chi_BE)."""
        return (1.0 - self.fer) * (self.beta * self.I_AB - self.chi_BE)

    def csv_row(self) -> list:
        ctx = self.context
        return [ctx.get("sigma_I", ""), ctx.get("beta_jitter", ""), ctx.get("T_hat", ""),
                ctx.get("xi_hat", ""), self.I_AB, self.chi_BE, self.beta, self.fer, self.skr,
                self.skr_bits_per_s]


def skr(I_AB: float, chi_BE: float, beta: float, fer: float,
        symbol_rate: float = PAPER_SYMBOL_RATE, **context) -> RateReport:
    if not 0.0 <= fer <= 1.0:
        raise ValueError(f"fer must be in [0, 1], got {fer}")
    if not beta > 0:
        raise ValueError("beta must be > 0")
    raw = (1.0 - fer) * (beta * I_AB - chi_BE)
    positive = raw > 0
    value = raw if positive else 0.0
    return RateReport(I_AB, chi_BE, beta, fer, value, value * symbol_rate, positive, context)
