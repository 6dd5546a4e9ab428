"""Fixed-beta versus adaptive-beta key-rate campaigns over fading channels.

Each block draws a transmittance from the fading model; parameter-estimation
noise is drawn from the estimators' asymptotic distribution for the configured
block size instead of simulating every symbol.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..fso_channel import TurbulenceParams, sample_transmittance
from ..security import SecurityParams, finite_size_chi, mutual_information, snr_of
from .montecarlo import FerCell, quadrature_capacity, run_cells
from .table import BetaFerTable, select_beta

__all__ = ["CAMPAIGN_COLUMNS", "BlockEstimate", "SettingSummary", "CampaignReport",
           "estimate_block", "run_campaign"]

CAMPAIGN_COLUMNS = ("setting_id", "sigma_I", "beta_jitter", "block_id", "T_block", "I_AB",
                    "chi_BE", "mode", "beta", "fer_pred", "fer_emp", "skr")
SUMMARY_COLUMNS = ("setting_id", "sigma_I", "beta_jitter", "mean_T", "blocks", "best_fixed_beta",
                   "best_fixed_skr", "adaptive_skr", "gain", "gain_ci", "skipped_blocks")


@dataclass(frozen=True)
class BlockEstimate:
    T: float
    T_hat: float
    xi_hat: float
    snr_hat: float
    I_AB: float
    chi_BE: float


def estimate_block(p: SecurityParams, T: float, rng, constellation=None) -> BlockEstimate:
    """Draw (T_hat, xi_hat) for one block and derive I_AB and finite-size chi_BE."""
    m = 2.0 * p.block_size
    a = math.sqrt(p.eta * T / 2.0)
    s2 = 1.0 + p.eta * T * p.xi / 2.0 + p.v_el
    a_hat = a + rng.standard_normal() * math.sqrt(s2 / (m * p.V_A))
    s2_hat = s2 * (1.0 + rng.standard_normal() * math.sqrt(2.0 / m))
    T_hat = 2.0 * a_hat * a_hat / p.eta
    xi_hat = 2.0 * (s2_hat - 1.0 - p.v_el) / (p.eta * T_hat)
    T_use = min(T_hat, 1.0)
    xi_use = max(xi_hat, 0.0)
    snr = snr_of(p, T_use, xi_use)
    i_ab = mutual_information(p, T_use, constellation, xi=xi_use)
    chi = finite_size_chi(p, T_use, xi_use, p.block_size)
    return BlockEstimate(T, T_hat, xi_hat, snr, i_ab, chi)


@dataclass
class SettingSummary:
    setting_id: int
    params: TurbulenceParams
    blocks: int
    fixed_mean: dict          # beta -> mean SKR
    adaptive_mean: float
    best_fixed_beta: float
    best_fixed_skr: float
    gain: float
    gain_ci: float
    skipped: int

    def row(self):
        return [self.setting_id, self.params.sigma_I,
                "inf" if self.params.no_jitter else self.params.beta_jitter, self.params.mean_T,
                self.blocks, self.best_fixed_beta, self.best_fixed_skr, self.adaptive_mean,
                self.gain, self.gain_ci, self.skipped]


@dataclass
class CampaignReport:
    rows: list = field(default_factory=list)
    summaries: list = field(default_factory=list)

    def write_csv(self, path) -> None:
        _write(path, CAMPAIGN_COLUMNS, self.rows)

    def write_summary(self, path) -> None:
        _write(path, SUMMARY_COLUMNS, [s.row() for s in self.summaries])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        return "inf" if math.isinf(v) else repr(round(v, 12))
    return v


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _skr(beta, fer, i_ab, chi):
    if not math.isfinite(chi):
        return 0.0
    return max(0.0, (1.0 - fer) * (beta * i_ab - chi))


def run_campaign(settings, blocks_per_setting: int, table: BetaFerTable, *,
                 security: SecurityParams | None = None, seed: int = 0, d="any",
                 constellation=None, code=None, frames_per_block: int = 0,
                 max_iter: int = 100, workers: int = 1, shaped_mi: bool = False,
                 interpolate: bool = False) -> CampaignReport:
    """Simulate blocks for every turbulence setting, fixed and adaptive beta side by side.

    With ``frames_per_block > 0`` and a ``code``, the adaptive choice of every
    block is also decoded at the block's true SNR to give an empirical FER.
    I_AB is the Gaussian-modulation value unless ``shaped_mi`` asks for the
    constellation's own mutual information. ``interpolate`` switches the
    table lookup from nearest grid SNR to log-FER interpolation.
    """
    p = security or SecurityParams()
    if blocks_per_setting < 1:
        raise ValueError("blocks_per_setting must be >= 1")
    if frames_per_block and code is None:
        raise ValueError("frames_per_block needs a code")
    betas = sorted({e.beta for e in table.entries if e.available})
    if not betas:
        raise ValueError("table has no usable rows")
    report = CampaignReport()
    for sid, tp in enumerate(settings):
        ss = np.random.SeedSequence(seed, spawn_key=(sid,))
        s_fade, s_est, s_dec = ss.spawn(3)
        Ts = sample_transmittance(tp, blocks_per_setting, np.random.default_rng(s_fade))
        rng = np.random.default_rng(s_est)
        fixed = np.zeros((blocks_per_setting, len(betas)))
        adaptive = np.zeros(blocks_per_setting)
        pending = []            # (row index, cell) for empirical FER
        skipped = 0
        jitter = "inf" if tp.no_jitter else tp.beta_jitter
        for bid, T in enumerate(Ts):
            est = estimate_block(p, float(T), rng, constellation if shaped_mi else None)
            rows = {e.beta: e for e in table.rows_at(est.snr_hat, d, interpolate)}
            for j, beta in enumerate(betas):
                e = rows.get(beta)
                fer = e.fer if e is not None else 1.0
                fixed[bid, j] = _skr(beta, fer, est.I_AB, est.chi_BE)
                report.rows.append([sid, tp.sigma_I, jitter, bid, est.T, est.I_AB, est.chi_BE,
                                    "fixed", beta, e.fer if e else math.nan, math.nan,
                                    fixed[bid, j]])
            pick = select_beta(table, est.I_AB, est.chi_BE, est.snr_hat, d, interpolate) \
                if math.isfinite(est.chi_BE) else None
            if pick is None:
                skipped += 1
                report.rows.append([sid, tp.sigma_I, jitter, bid, est.T, est.I_AB, est.chi_BE,
                                    "adaptive", math.nan, math.nan, math.nan, 0.0])
                continue
            beta, fer = pick
            adaptive[bid] = _skr(beta, fer, est.I_AB, est.chi_BE)
            report.rows.append([sid, tp.sigma_I, jitter, bid, est.T, est.I_AB, est.chi_BE,
                                "adaptive", beta, fer, math.nan, adaptive[bid]])
            if frames_per_block:
                true_snr = snr_of(p, float(T))
                rate = beta * quadrature_capacity(est.snr_hat)
                pending.append((len(report.rows) - 1,
                                FerCell(bid, true_snr, rate, table.meta.get("d"), frames_per_block)))
        if pending:
            dec_seed = int(s_dec.generate_state(1)[0])
            results = run_cells(code, [c for _, c in pending], dec_seed, constellation,
                                max_iter, workers=workers)
            for (ri, _), res in zip(pending, results):
                report.rows[ri][10] = res.fer
        means = fixed.mean(axis=0)
        jbest = int(np.argmax(means))
        best = float(means[jbest])
        diff = adaptive - fixed[:, jbest]
        se = diff.std(ddof=1) / math.sqrt(blocks_per_setting) if blocks_per_setting > 1 else 0.0
        gain = float(diff.mean()) / best if best > 0 else math.nan
        gain_ci = 1.96 * se / best if best > 0 else math.nan
        report.summaries.append(SettingSummary(sid, tp, blocks_per_setting,
                                               dict(zip(betas, means.tolist())),
                                               float(adaptive.mean()), betas[jbest], best,
                                               float(gain), float(gain_ci), skipped))
    return report
