import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvrecon.security import (RATE_CSV_COLUMNS, PhysicalityError, SecurityParams, entropy_g,
                              finite_size_chi, holevo_bound, mutual_information, skr, snr_of,
                              symplectic_eigenvalues, symplectic_spectrum)

PAPER = SecurityParams()
T_PAPER = 0.38


# --- independent oracles ----------------------------------------------------------

def omega(n):
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def oracle_spectrum(cov):
    """|eig(i Omega V)| taken pairwise."""
    n = cov.shape[0] // 2
    ev = np.sort(np.abs(np.linalg.eigvals(1j * omega(n) @ cov)))[::-1]
    return ev[0::2]


def oracle_entropy(cov):
    nu = oracle_spectrum(cov)
    x = np.maximum(nu - 1.0, 0.0) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(x > 0, (x + 1) * np.log2(x + 1) - x * np.log2(np.where(x > 0, x, 1)), 0.0)
    return float(terms.sum())


def tmsv(v):
    c = math.sqrt(v * v - 1.0)
    z = np.diag([1.0, -1.0])
    return np.block([[v * np.eye(2), c * z], [c * z, v * np.eye(2)]])


def beam_splitter(n, i, j, t):
    s = np.eye(2 * n)
    a, r = math.sqrt(t), math.sqrt(1.0 - t)
    e = np.eye(2)
    s[2 * i:2 * i + 2, 2 * i:2 * i + 2] = a * e
    s[2 * i:2 * i + 2, 2 * j:2 * j + 2] = r * e
    s[2 * j:2 * j + 2, 2 * i:2 * i + 2] = -r * e
    s[2 * j:2 * j + 2, 2 * j:2 * j + 2] = a * e
    return s


def eve_holevo(p, T):
    """Eve holds both arms of an entangling cloner; chi = S(E) - S(E | Bob's heterodyne)."""
    V = p.V_A + 1.0
    W = 1.0 + T * p.xi / (1.0 - T) if T < 1 else 1.0
    vf = 1.0 + 2.0 * p.v_el / (1.0 - p.eta) if p.eta < 1 else 1.0
    # modes: A, B, E1, E2, F, G
    cov = np.zeros((12, 12))
    cov[0:4, 0:4], cov[4:8, 4:8], cov[8:12, 8:12] = tmsv(V), tmsv(W), tmsv(vf)
    for s in (beam_splitter(6, 1, 2, T), beam_splitter(6, 1, 4, p.eta)):
        cov = s @ cov @ s.T
    idx = lambda modes: [2 * m + k for m in modes for k in (0, 1)]  # noqa: E731
    e, b = idx([2, 3]), idx([1])
    a_, b_, c_ = cov[np.ix_(e, e)], cov[np.ix_(b, b)], cov[np.ix_(e, b)]
    cond = a_ - c_ @ np.linalg.solve(b_ + np.eye(2), c_.T)
    return oracle_entropy(a_) - oracle_entropy(cond)


def random_physical_cov(rng, n):
    """S diag(nu) S^T with S a random symplectic matrix (product of symplectic exponentials)."""
    om = omega(n)
    h = rng.standard_normal((2 * n, 2 * n))
    h = 0.3 * (h + h.T)
    from scipy.linalg import expm
    s = expm(om @ h)
    nus = 1.0 + rng.exponential(2.0, n)
    return s @ np.diag(np.repeat(nus, 2)) @ s.T, np.sort(nus)[::-1]


# --- snr / mutual information -----------------------------------------------------

def test_snr_unit_example():
    p = SecurityParams(V_A=2.0, eta=1.0, xi=0.0, v_el=0.0)
    assert snr_of(p, 1.0) == pytest.approx(1.0)
    assert mutual_information(p, 1.0) == pytest.approx(1.0)


def test_snr_paper_point():
    assert snr_of(PAPER, T_PAPER) == pytest.approx(0.51, abs=0.01)


def test_mi_zero_snr():
    p = SecurityParams(V_A=1e-300)
    assert mutual_information(p, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_mi_paper_point_per_quadrature():
    # the ~0.3 bit operating figure is per real quadrature under heterodyne detection
    assert mutual_information(PAPER, T_PAPER, per_quadrature=True) == pytest.approx(0.3, rel=0.15)
    assert mutual_information(PAPER, T_PAPER) == pytest.approx(
        2 * mutual_information(PAPER, T_PAPER, per_quadrature=True))


@given(t1=st.floats(0.01, 1.0), t2=st.floats(0.01, 1.0))
def test_snr_monotone_in_T(t1, t2):
    lo, hi = sorted((t1, t2))
    assert snr_of(PAPER, lo) <= snr_of(PAPER, hi)


# --- entropy_g ------------------------------------------------------------------------

def test_entropy_g_values():
    assert entropy_g(0.0) == 0.0
    assert entropy_g(1.0) == pytest.approx(2.0)
    assert entropy_g(1e-14) > 0
    x = np.array([1e-13, 1e-11])
    assert np.all(np.diff(entropy_g(x)) > 0)


@given(st.floats(0.0, 1e6))
def test_entropy_g_nonnegative(x):
    assert entropy_g(x) >= 0


# --- symplectic eigenvalues ----------------------------------------------------------

def test_vacuum_and_pure_state():
    assert symplectic_eigenvalues(np.eye(4)) == pytest.approx((1.0, 1.0))
    assert symplectic_eigenvalues(tmsv(3.0)) == pytest.approx((1.0, 1.0))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_spectrum_matches_oracle(n, rng):
    for _ in range(20):
        cov, nus = random_physical_cov(rng, n)
        got = symplectic_spectrum(cov)
        assert np.allclose(got, oracle_spectrum(cov), rtol=1e-9, atol=1e-9)
        assert np.allclose(got, nus, rtol=1e-8)


def test_unphysical_rejected():
    with pytest.raises(PhysicalityError):
        symplectic_eigenvalues(0.5 * np.eye(4))


def test_asymmetric_rejected():
    m = np.eye(4)
    m[0, 1] = 0.3
    with pytest.raises(ValueError):
        symplectic_eigenvalues(m)


# --- Holevo bound -------------------------------------------------------------------

def test_holevo_lossless_noiseless():
    p = SecurityParams(xi=0.0, eta=1.0, v_el=0.0)
    assert holevo_bound(p, 1.0) == pytest.approx(0.0, abs=1e-9)


def test_holevo_no_modulation():
    assert holevo_bound(PAPER.with_(V_A=1e-9, xi=0.0), T_PAPER) == pytest.approx(0.0, abs=1e-9)
    # with excess noise Eve still knows the noise she injected into Bob's data
    residual = holevo_bound(PAPER.with_(V_A=1e-9), T_PAPER)
    assert residual == pytest.approx(eve_holevo(PAPER.with_(V_A=1e-9), T_PAPER), abs=1e-9)


def test_holevo_paper_point_sign():
    chi = holevo_bound(PAPER, T_PAPER)
    assert 0 < chi < 0.93 * mutual_information(PAPER, T_PAPER)


@pytest.mark.parametrize("T", [0.05, 0.2, 0.38, 0.7, 0.95])
@pytest.mark.parametrize("kw", [{}, {"xi": 0.05}, {"v_el": 0.0}, {"eta": 0.9, "v_el": 0.3},
                                {"eta": 1.0, "v_el": 0.0}, {"V_A": 2.0, "xi": 0.01}])
def test_holevo_matches_eve_purification(T, kw):
    p = PAPER.with_(**kw)
    assert holevo_bound(p, T) == pytest.approx(eve_holevo(p, T), abs=1e-9)


def test_holevo_rejects_eta1_with_noise():
    with pytest.raises(ValueError):
        holevo_bound(PAPER.with_(eta=1.0), 0.5)


def test_holevo_monotone_grid():
    Ts = np.linspace(0.1, 0.9, 9)
    xis = np.linspace(0.0, 0.05, 6)
    grid = np.array([[holevo_bound(PAPER, T, xi) for xi in xis] for T in Ts])
    mi = np.array([[mutual_information(PAPER, T, xi=xi) for xi in xis] for T in Ts])
    assert np.all(np.diff(grid, axis=1) >= -1e-12)   # non-decreasing in xi
    # in T, Eve's share of Bob's information shrinks and the key margin grows
    assert np.all(np.diff(grid / mi, axis=0) <= 1e-12)
    assert np.all(np.diff(mi - grid, axis=0) >= -1e-12)


# --- finite size ------------------------------------------------------------------------

def test_finite_size_limit():
    asym = holevo_bound(PAPER, T_PAPER)
    assert finite_size_chi(PAPER, T_PAPER, PAPER.xi, 1e18) == pytest.approx(asym, abs=1e-6)


def test_finite_size_penalty_and_halving():
    asym = holevo_bound(PAPER, T_PAPER)
    n = PAPER.block_size
    chis = [finite_size_chi(PAPER, T_PAPER, PAPER.xi, n / 2 ** k) for k in range(6)]
    assert chis[0] > asym
    assert all(b > a for a, b in zip(chis, chis[1:]))


def test_finite_size_no_key():
    assert math.isinf(finite_size_chi(PAPER, 0.001, 0.5, 1e4))
    with pytest.raises(ValueError):
        finite_size_chi(PAPER, T_PAPER, PAPER.xi, 100)


# --- skr ------------------------------------------------------------------------------------

def test_skr_examples():
    assert skr(0.3, 0.2, 0.93, 1.0).skr == 0.0
    assert skr(0.3, 0.279, 0.93, 0.1).skr == pytest.approx(0.0, abs=1e-15)
    r = skr(0.3, 0.2, 0.93, 0.1)
    assert r.skr == pytest.approx(0.0711, abs=1e-12)
    assert r.skr_bits_per_s == pytest.approx(0.0711 * 250e6)


def test_skr_negative_clamped():
    r = skr(0.3, 0.5, 0.9, 0.0)
    assert r.skr == 0.0 and not r.positive and r.raw < 0


@given(i=st.floats(0, 2), chi=st.floats(0, 2), beta=st.floats(0.01, 1.2), fer=st.floats(0, 1))
def test_skr_identity(i, chi, beta, fer):
    r = skr(i, chi, beta, fer)
    assert r.raw == (1 - fer) * (beta * i - chi)
    assert r.skr == max(r.raw, 0.0)


def test_skr_input_validation():
    with pytest.raises(ValueError):
        skr(0.3, 0.2, 0.9, 1.5)
    with pytest.raises(ValueError):
        skr(0.3, 0.2, 0.0, 0.1)


def test_rate_report_csv_row():
    r = skr(0.3, 0.2, 0.93, 0.1, sigma_I=0.009, beta_jitter=8.6, T_hat=0.38, xi_hat=0.0045)
    row = r.csv_row()
    assert len(row) == len(RATE_CSV_COLUMNS)
    assert row[0] == 0.009 and row[-2] == r.skr


def test_paper_point_positive_key():
    chi = finite_size_chi(PAPER, T_PAPER, PAPER.xi, PAPER.block_size)
    assert skr(mutual_information(PAPER, T_PAPER), chi, 0.93, 0.1).positive


@pytest.mark.parametrize("kw", [{"V_A": 0}, {"eta": 0}, {"eta": 1.1}, {"xi": -1}, {"v_el": -0.1},
                                {"epsilon_pe": 0}])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        SecurityParams(**kw)
