"""Fast invariant checks run by ``cvrecon validate``."""
from __future__ import annotations

import math

import numpy as np


def _check(name, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # noqa: BLE001 - a crashing check is a failed check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return name, bool(ok), detail


def run_checks(cfg, seed: int = 12345) -> list[tuple[str, bool, str]]:
    from . import mdr
    from .constellation import build_ps_qam
    from .fso_channel import sample_fading, sample_transmittance
    from .ldpc import choose_sp, decode, has_four_cycles, sp_counts
    from .security import finite_size_chi, holevo_bound, mutual_information, symplectic_spectrum

    rng = np.random.default_rng(seed)
    code = cfg.build_code()
    c = cfg.build_constellation()
    p = cfg.security_params()
    checks = []

    def constellation():
        err_p = abs(c.probabilities.sum() - 1)
        err_v = abs(np.sum(c.probabilities * np.abs(c.points) ** 2) / c.variance - 1)
        uni = build_ps_qam(16, 0.0, 1.0)
        ok = err_p < 1e-12 and err_v < 1e-9 and np.allclose(uni.probabilities, 1 / 16, rtol=0, atol=1e-15)
        return ok, f"sum err {err_p:.1e}, variance err {err_v:.1e}"
    checks.append(("constellation_moments", constellation))

    def norms():
        worst = 0.0
        for d in (1, 2, 4, 8):
            a, b = rng.standard_normal((2, 1000, d))
            lhs = np.linalg.norm(mdr.cd_mul(a, b), axis=1)
            worst = max(worst, np.max(np.abs(lhs - np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))))
        return worst < 1e-10, f"max deviation {worst:.1e}"
    checks.append(("division_algebra_norms", norms))

    def householder():
        y = rng.standard_normal((200, 128))
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        u = mdr.spherical_word(rng.integers(0, 2, 200 * 128), 128)
        err = np.max(np.abs(mdr.apply_rotation(mdr.encode_rotation(y, u, 128), y) - u))
        return err < 1e-10, f"max |Qy - u| {err:.1e}"
    checks.append(("orthogonal_map_d128", householder))

    def symplectic():
        T = 0.38
        nus = symplectic_spectrum(_two_mode_cov(p, T))
        from .security import _omega
        cov = _two_mode_cov(p, T)
        ref = np.sort(np.abs(np.linalg.eigvals(1j * _omega(2) @ cov)))[::2]
        err = np.max(np.abs(np.sort(nus) - ref))
        return err < 1e-9, f"max deviation {err:.1e}"
    checks.append(("symplectic_eigenvalues", symplectic))

    def sp_search():
        n, k = 1000, 200
        for target in (0.1, 0.15, 0.25, 0.3, 0.45):
            p_, s_ = sp_counts(target, n, k)
            best = None
            for pp in range(n - k):
                for ss in range(k):
                    r = (k - ss) / (n - pp - ss)
                    good = r >= target if target > k / n else r <= target
                    if good and (best is None or pp + ss < sum(best)):
                        best = (pp, ss)
                    if good:
                        break
                if best is not None and pp > sum(best):
                    break
            if best != (p_, s_):
                return False, f"target {target}: got {(p_, s_)}, search {best}"
        return True, "5 targets agree with exhaustive search"
    checks.append(("sp_protocol", sp_search))

    def girth():
        return (not has_four_cycles(code.parity_check)) and code.girth >= 6, \
            f"N={code.N}, girth {code.girth}"
    checks.append(("code_girth", girth))

    def encode_decode():
        enc = code.encoder
        ra = choose_sp(cfg.fer_sweep.rate, code)
        fails = 0
        for _ in range(20):
            info = ra.shorten_info(rng.integers(0, 2, enc.k, dtype=np.uint8), enc.info_positions)
            cw = enc.encode(info)
            if code.syndrome(cw).any():
                return False, "nonzero syndrome"
            llr = ra.decoder_llrs(30.0 * (1 - 2.0 * cw[ra.tx_positions]))
            res = decode(code, ra, llr, 10)
            fails += not (res.converged and np.array_equal(res.hard_bits, cw))
        return fails == 0, f"{20 - fails}/20 noiseless frames recovered"
    checks.append(("encode_decode_roundtrip", encode_decode))

    def channel():
        worst_si, worst_mean = 0.0, 0.0
        for tp in cfg.turbulence_params():
            _, i_s, _ = sample_fading(tp, 100_000, rng)
            si = i_s.var() / i_s.mean() ** 2
            if tp.sigma_I > 0:
                worst_si = max(worst_si, abs(si / tp.sigma_I - 1))
            T = sample_transmittance(tp, 100_000, rng)
            worst_mean = max(worst_mean, abs(T.mean() / tp.mean_T - 1))
        return worst_si < 0.05 and worst_mean < 0.01, \
            f"scintillation rel err {worst_si:.3f}, mean T rel err {worst_mean:.1e}"
    checks.append(("fading_statistics", channel))

    def key_rate():
        T = 0.38
        i_ab = mutual_information(p, T)
        chi = holevo_bound(p, T)
        chi_fs = finite_size_chi(p, T, p.xi, p.block_size)
        ok = 0.93 * i_ab - chi_fs > 0 and chi_fs > chi
        return ok, f"I_AB {i_ab:.4f}, chi {chi:.4f}, finite-size chi {chi_fs:.4f}"
    checks.append(("key_rate_sign", key_rate))

    return [_check(n, f) for n, f in checks]


def _two_mode_cov(p, T):
    """Alice-Bob covariance seen at Bob's detector input (one mode each)."""
    V = p.V_A + 1.0
    a = V
    b = T * (V - 1.0 + p.xi) + 1.0
    c = math.sqrt(T * (V * V - 1.0))
    z = np.diag([1.0, -1.0])
    return np.block([[a * np.eye(2), c * z], [c * z, b * np.eye(2)]])
