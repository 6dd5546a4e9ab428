"""End-to-end reverse reconciliation of one quantum block.

Bob turns random bits into codewords, hides each codeword on the sphere of
his measured chunks and publishes rotation messages (plus chunk norms and a
hash of his information bits). Alice undoes the rotations on her own chunks,
decodes, and keeps only frames whose hash matches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import mdr
from ..ldpc import decode, toeplitz_digest

__all__ = ["BobFrame", "BlockOutcome", "frame_length", "bob_side", "alice_side", "block_snr",
           "reconcile_block"]


def frame_length(ra, d: int) -> int:
    """Real quadratures consumed per frame: transmitted bits rounded up to whole chunks."""
    return -(-ra.n_tx // d) * d


@dataclass(frozen=True)
class BobFrame:
    message: mdr.RotationMessage
    norms: np.ndarray
    digest: int
    info: np.ndarray = field(repr=False)     # private to Bob; never read by alice_side


@dataclass
class BlockOutcome:
    beta_used: float
    fer_predicted: float
    frame_success: np.ndarray
    skr_achieved: float
    key_bits: np.ndarray = field(repr=False)

    @property
    def frames_total(self) -> int:
        return int(self.frame_success.size)

    @property
    def frames_failed(self) -> int:
        return int(self.frames_total - np.count_nonzero(self.frame_success))

    @property
    def fer_empirical(self) -> float:
        return self.frames_failed / self.frames_total if self.frames_total else math.nan


def _standardize(v: np.ndarray) -> np.ndarray:
    sd = float(np.sqrt(np.mean(v * v)))
    if sd <= 0:
        raise mdr.ReconciliationError("block has zero energy")
    return v / sd


def _n_frames(b, ra, d, max_frames):
    n = b.x.size // frame_length(ra, d)
    return n if max_frames is None else min(n, int(max_frames))


def bob_side(y: np.ndarray, code, ra, d: int, n_frames: int, rng) -> list[BobFrame]:
    enc = code.encoder
    L = frame_length(ra, d)
    ys = _standardize(np.asarray(y, dtype=np.float64))
    frames = []
    for f in range(n_frames):
        info = ra.shorten_info(rng.integers(0, 2, enc.k, dtype=np.uint8), enc.info_positions)
        tx = enc.encode(info)[ra.tx_positions]
        bits = np.concatenate([tx, rng.integers(0, 2, L - tx.size, dtype=np.uint8)])
        y_hat, ny = mdr.chunk_and_normalize(ys[f * L:(f + 1) * L], d)
        msg = mdr.encode_rotation(y_hat, mdr.spherical_word(bits, d), d)
        frames.append(BobFrame(msg, ny, toeplitz_digest(info), info))
    return frames


def alice_side(x: np.ndarray, frames: list[BobFrame], code, ra, d: int, snr: float,
               max_iter: int = 100, min_sum: bool = False):
    """Returns (success flags, verified information bits of each frame or None)."""
    enc = code.encoder
    L = frame_length(ra, d)
    xs = _standardize(np.asarray(x, dtype=np.float64))
    flags, keys = [], []
    for f, fr in enumerate(frames):
        x_hat, nx = mdr.chunk_and_normalize(xs[f * L:(f + 1) * L], d)
        llr = mdr.compute_llrs(mdr.apply_rotation(fr.message, x_hat), fr.norms, snr, d, nx)
        res = decode(code, ra, ra.decoder_llrs(llr.ravel()[:ra.n_tx]), max_iter, min_sum)
        info_hat = res.hard_bits[enc.info_positions]
        ok = res.converged and toeplitz_digest(info_hat) == fr.digest
        flags.append(ok)
        keys.append(info_hat if ok else None)
    return np.array(flags, dtype=bool), keys


def block_snr(b) -> float:
    """Per-quadrature SNR estimated from the block's (x, y) regression."""
    from ..fso_channel import _fit
    a, s2, vx = _fit(b)
    return a * a * vx / s2


def reconcile_block(b, code, ra, d: int, *, snr: float | None = None, seed=None,
                    max_frames: int | None = None, beta: float = math.nan,
                    fer_predicted: float = math.nan, I_AB: float | None = None,
                    chi_BE: float | None = None, max_iter: int = 100,
                    min_sum: bool = False) -> BlockOutcome:
    """Run both parties over every frame that fits in the block."""
    d = mdr.check_dimension(d)
    n_frames = _n_frames(b, ra, d, max_frames)
    if n_frames < 1:
        raise mdr.ReconciliationError("block too short for a single frame")
    if snr is None:
        snr = block_snr(b)
    rng = np.random.default_rng(seed)
    frames = bob_side(b.y, code, ra, d, n_frames, rng)
    flags, keys = alice_side(b.x, frames, code, ra, d, snr, max_iter, min_sum)
    keep = np.ones(code.encoder.k, dtype=bool)
    keep[np.isin(code.encoder.info_positions, ra.shortened)] = False
    key = np.concatenate([k[keep] for k in keys if k is not None] or [np.empty(0, np.uint8)])
    fer = 1.0 - flags.mean()
    skr = math.nan
    if I_AB is not None and chi_BE is not None and not math.isnan(beta):
        skr = max(0.0, (1.0 - fer) * (beta * I_AB - chi_BE))
    return BlockOutcome(beta, fer_predicted, flags, skr, key)
