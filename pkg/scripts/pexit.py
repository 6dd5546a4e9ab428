"""Protograph EXIT analysis on the BI-AWGN channel (design-time tool).

Thresholds are reported as efficiencies beta = R / C(snr*) against the
real-Gaussian capacity C = log2(1 + snr) / 2, matching the FER sweeps.
"""
from __future__ import annotations

import math

import numpy as np

H1, H2, H3 = 0.3073, 0.8935, 1.1064


def J(s):
    s = np.asarray(s, dtype=float)
    return np.where(s <= 0, 0.0, (1.0 - 2.0 ** (-H1 * np.abs(s) ** (2 * H2))) ** H3)


def Jinv(i):
    i = np.clip(np.asarray(i, dtype=float), 0.0, 1.0 - 1e-12)
    return np.where(i <= 0, 0.0, (-np.log2(1.0 - i ** (1.0 / H3)) / H1) ** (1.0 / (2 * H2)))


def converges(base, snr, punctured=(), iters=800, tol=1e-7):
    b = np.asarray(base, dtype=float)
    m, n = b.shape
    sch2 = np.full(n, 4.0 * snr)
    sch2[list(punctured)] = 0.0
    mask = b > 0
    iac = np.zeros((m, n))          # check-to-variable MI
    prev = -1.0
    for _ in range(iters):
        sc = Jinv(iac) ** 2
        tot_v = (b * sc).sum(axis=0) + sch2
        iev = np.where(mask, J(np.sqrt(np.maximum(tot_v[None, :] - sc, 0.0))), 0.0)
        sv = Jinv(1.0 - iev) ** 2
        tot_c = (b * sv).sum(axis=1)
        iac = np.where(mask, 1.0 - J(np.sqrt(np.maximum(tot_c[:, None] - sv, 0.0))), 0.0)
        app = J(np.sqrt((b * Jinv(iac) ** 2).sum(axis=0) + sch2))
        worst = app.min()
        if worst > 1 - tol:
            return True
        if abs(worst - prev) < 1e-10:
            return False
        prev = worst
    return False


def threshold_beta(base, rate, punctured=(), lo=0.01, hi=20.0, steps=40):
    """Smallest SNR at which PEXIT converges, reported as beta = rate / C(snr)."""
    if not converges(base, hi, punctured):
        return 0.0
    for _ in range(steps):
        mid = math.sqrt(lo * hi)
        if converges(base, mid, punctured):
            hi = mid
        else:
            lo = mid
        if hi / lo < 1.0005:
            break
    return rate / (0.5 * math.log2(1.0 + hi))


def punctured_types(order, n_types, k_types, rate):
    """Whole types to puncture (fractional part ignored) to reach ``rate``."""
    need = n_types - k_types / rate
    return tuple(order[:int(math.floor(need + 1e-9))])


if __name__ == "__main__":
    import sys
    from cvrecon.ldpc import load_base_matrix
    p = load_base_matrix(sys.argv[1])
    m, n = p.shape
    for r in (0.2, 0.25, 0.3, 1 / 3):
        pt = punctured_types(p.puncturable, n, n - m, r)
        eff = (n - m) / (n - len(pt))
        print(f"R={r:.3f} punctured={pt} realized={eff:.3f} beta*={threshold_beta(p.base_matrix, eff, pt):.4f}")
