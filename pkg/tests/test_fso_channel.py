import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import jarque_bera

from cvrecon.constellation import build_ps_qam, default_nu
from cvrecon.fso_channel import (PAPER_SETTINGS, ChannelError, EstimationError, QuantumBlock,
                                 ReceiverModel, TurbulenceParams, estimate_channel,
                                 estimate_stderr, generate_block, load_block, sample_fading,
                                 sample_transmittance, save_block, transmit)
from cvrecon.security import SecurityParams, snr_of

IDEAL = ReceiverModel(eta=1.0, clearance_db=math.inf, xi=0.0)


@pytest.fixture(scope="module")
def ps256():
    return build_ps_qam(256, default_nu(), 7.44)


# --- parameter types ---------------------------------------------------------------------

def test_receiver_electronic_noise():
    assert ReceiverModel(clearance_db=10).v_el == pytest.approx(0.1)
    assert IDEAL.v_el == 0.0


@pytest.mark.parametrize("kw", [{"eta": 0}, {"eta": 1.2}, {"clearance_db": 0}, {"xi": -1e-3}])
def test_receiver_validation(kw):
    with pytest.raises(ChannelError):
        ReceiverModel(**kw)


@pytest.mark.parametrize("kw", [{"sigma_I": -0.1, "beta_jitter": 2}, {"sigma_I": 0.01},
                                {"sigma_I": 0.01, "beta_jitter": 0},
                                {"sigma_I": 0.01, "beta_jitter": 2, "mean_T": 0},
                                {"sigma_I": 0.01, "beta_jitter": 2, "mean_T": 1.5}])
def test_turbulence_validation(kw):
    with pytest.raises(ChannelError):
        TurbulenceParams(**kw)


# --- fading ------------------------------------------------------------------------------

def test_no_fluctuation_limit():
    p = TurbulenceParams(0.0, no_jitter=True, mean_T=0.38)
    assert np.all(sample_transmittance(p, 100, 1) == 0.38)


def test_scintillation_index_recovered():
    p = TurbulenceParams(0.013, 1.6, 0.35)
    _, i_s, i_p = sample_fading(p, 100_000, 2)
    assert i_s.var() / i_s.mean() ** 2 == pytest.approx(0.013, rel=0.05)
    # pointing factor I_p = U^(1/beta) has mean beta/(beta+1)
    assert i_p.mean() == pytest.approx(1.6 / 2.6, rel=0.01)


def test_weakest_setting_nearly_constant():
    t = sample_transmittance(PAPER_SETTINGS[0], 100_000, 3)
    assert t.std() / t.mean() < 0.05


@pytest.mark.parametrize("p", PAPER_SETTINGS)
def test_transmittance_range_and_mean(p):
    t = sample_transmittance(p, 100_000, 4)
    assert np.all((t > 0) & (t <= 1))
    assert t.mean() == pytest.approx(p.mean_T, rel=0.01)


def test_raw_fading_mean_without_rescale():
    # the ceiling makes the un-rescaled draw unbiased too
    p = PAPER_SETTINGS[2]
    t, _, _ = sample_fading(p, 400_000, 5)
    assert t.mean() == pytest.approx(p.mean_T, rel=0.01)


@given(sigma=st.floats(0, 0.05), beta=st.floats(0.5, 200), mean_t=st.floats(0.05, 0.6),
       seed=st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40)
def test_transmittance_in_unit_interval(sigma, beta, mean_t, seed):
    t = sample_transmittance(TurbulenceParams(sigma, beta, mean_t), 500, seed)
    assert np.all((t > 0) & (t <= 1))


# --- transmit --------------------------------------------------------------------------

def test_ideal_channel_limit(rng):
    x = rng.normal(0, math.sqrt(7.44), 1_000_000)
    y = transmit(x, 1.0, IDEAL, 6)
    assert np.var(y - x / math.sqrt(2)) == pytest.approx(1.0, rel=0.01)


def test_snr_matches_security_model(ps256, rng):
    from cvrecon.constellation import sample_symbols, to_quadratures
    r = ReceiverModel()
    x = to_quadratures(sample_symbols(ps256, 1_000_000, 7))
    assert x.var() == pytest.approx(7.44, rel=0.01)
    y = transmit(x, 0.38, r, 8)
    a = r.gain(0.38)
    emp = a * a * x.var() / np.var(y - a * x)
    assert emp == pytest.approx(snr_of(SecurityParams(), 0.38), rel=0.02)


def test_signal_off(rng):
    r = ReceiverModel()
    y = transmit(np.zeros(1_000_000), 0.38, r, 9)
    assert y.var() == pytest.approx(r.noise_variance(0.38), rel=0.01)


def test_noise_gaussian():
    y = transmit(np.zeros(1_000_000), 0.38, ReceiverModel(), 10)
    assert jarque_bera(y).pvalue > 0.001


def test_transmit_validation():
    with pytest.raises(ChannelError):
        transmit(np.array([np.nan, 0.0]), 0.5, IDEAL)
    with pytest.raises(ChannelError):
        transmit(np.zeros(2), 0.0, IDEAL)


# --- blocks ---------------------------------------------------------------------------

@pytest.mark.slow
def test_paper_block_size(ps256):
    b = generate_block(ps256, PAPER_SETTINGS[1], ReceiverModel(), 6_800_000, 11)
    assert b.x.size == b.y.size == 13_600_000
    assert 0 <= b.T_block <= 1


def test_block_shape_and_determinism(ps256):
    a = generate_block(ps256, PAPER_SETTINGS[1], ReceiverModel(), 20_000, 12)
    b = generate_block(ps256, PAPER_SETTINGS[1], ReceiverModel(), 20_000, 12)
    assert a.x.size == 40_000
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y) and a.T_block == b.T_block


def test_block_static_channel(ps256):
    b = generate_block(ps256, TurbulenceParams(0.0, no_jitter=True, mean_T=0.4), ReceiverModel(),
                       1000, 13)
    assert b.T_block == 0.4


def test_block_validation():
    with pytest.raises(ChannelError):
        QuantumBlock(np.zeros(4), np.zeros(6), 0.5)
    with pytest.raises(ChannelError):
        QuantumBlock(np.zeros(4), np.zeros(4), 1.5)


# --- estimation -----------------------------------------------------------------------

def exact_moment_block(T, r, n, rng):
    """Block whose noise is orthogonal to x with exactly the model variance: no sampling error."""
    x = rng.normal(0, math.sqrt(7.44), 2 * n)
    z = rng.standard_normal(2 * n)
    z -= (z @ x) / (x @ x) * x
    z *= math.sqrt(r.noise_variance(T) * z.size / (z @ z))
    return QuantumBlock(x, r.gain(T) * x + z, T, r)


def test_noiseless_synthetic_block(rng):
    r = ReceiverModel(xi=0.0)
    T_hat, xi_hat = estimate_channel(exact_moment_block(0.40, r, 50_000, rng))
    assert T_hat == pytest.approx(0.40, rel=0.01)
    assert abs(xi_hat) <= 0.002


def test_ideal_identity_limit(rng):
    x = rng.normal(0, math.sqrt(7.44), 2_000_000)
    b = QuantumBlock(x, transmit(x, 1.0, IDEAL, 14), 1.0, IDEAL)
    T_hat, xi_hat = estimate_channel(b)
    sd_T, sd_xi = estimate_stderr(b)
    assert T_hat == pytest.approx(1.0, abs=3 * sd_T)
    assert xi_hat == pytest.approx(0.0, abs=3 * sd_xi)


def test_estimation_needs_samples():
    with pytest.raises(EstimationError):
        estimate_channel(QuantumBlock(np.ones(100), np.ones(100), 0.5))


def test_recovery_within_standard_errors(ps256):
    r = ReceiverModel()
    p = TurbulenceParams(0.0, no_jitter=True, mean_T=0.38)
    zt, zx = [], []
    for seed in range(100):
        b = generate_block(ps256, p, r, 50_000, 1000 + seed)
        (T_hat, xi_hat), (sd_T, sd_xi) = estimate_channel(b), estimate_stderr(b)
        zt.append((T_hat - 0.38) / sd_T)
        zx.append((xi_hat - r.xi) / sd_xi)
    zt, zx = np.array(zt), np.array(zx)
    assert np.all(np.abs(zt) < 3) and np.all(np.abs(zx) < 3)
    # the standard errors are calibrated, not merely loose
    assert 0.8 < zt.std() < 1.2 and 0.8 < zx.std() < 1.2


def test_excess_noise_average_over_settings(ps256):
    r = ReceiverModel()
    xis, sds = [], []
    for k, p in enumerate(PAPER_SETTINGS):
        for j in range(5):
            b = generate_block(ps256, p, r, 500_000, 2000 + 10 * k + j)
            xis.append(estimate_channel(b)[1])
            sds.append(estimate_stderr(b)[1])
    se = math.sqrt(np.sum(np.square(sds))) / len(sds)
    assert np.mean(xis) == pytest.approx(0.0045, abs=3 * se)


@pytest.mark.parametrize("fmt", ["bin", "csv"])
def test_dump_and_restore(ps256, tmp_path, fmt):
    b = generate_block(ps256, PAPER_SETTINGS[3], ReceiverModel(), 2_000, 15)
    back = load_block(save_block(b, tmp_path / f"blk.{fmt}", fmt))
    assert np.array_equal(back.x, b.x) and np.array_equal(back.y, b.y)
    assert back.T_block == b.T_block and back.receiver == b.receiver
