"""Rate adaptation by puncturing and shortening (sp-protocol).

Punctured bits are never transmitted and enter the decoder with zero LLR.
Shortened bits are information bits fixed to zero, known to both parties, and
enter the decoder as saturated LLRs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RateError", "InvalidRateError", "InfeasibleRateError",
    "RateAdaptation", "sp_counts", "choose_sp",
]


class RateError(ValueError):
    pass


class InvalidRateError(RateError):
    pass


class InfeasibleRateError(RateError):
    pass


def sp_counts(target_rate: float, n: int, k: int) -> tuple[int, int]:
    """Smallest (p, s) with (k - s)/(n - p - s) closest to target from above/below.

    Puncturing is used when the target exceeds k/n, shortening otherwise;
    the count is rounded up so the realised rate is the nearest feasible one
    on the far side of the target (never short of it when puncturing).
    """
    if not 0.0 < target_rate < 1.0:
        raise InvalidRateError(f"target rate must lie in (0, 1), got {target_rate}")
    design = k / n
    if math.isclose(target_rate, design, rel_tol=1e-12, abs_tol=1e-12):
        return 0, 0
    # tiny slack keeps exact-integer solutions from being bumped by fp noise
    if target_rate > design:
        p = math.ceil(n - k / target_rate - 1e-9)
        return max(p, 0), 0
    s = math.ceil((k - target_rate * n) / (1.0 - target_rate) - 1e-9)
    return 0, max(s, 0)


def _spread(positions: np.ndarray, count: int) -> np.ndarray:
    """Pick ``count`` entries evenly spaced across ``positions``."""
    if count >= positions.size:
        return positions.copy()
    idx = np.floor(np.arange(count) * positions.size / count).astype(np.int64)
    return positions[idx]


@dataclass(frozen=True)
class RateAdaptation:
    n: int
    k: int
    punctured: np.ndarray = field(repr=False)
    shortened: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("punctured", "shortened"):
            a = getattr(self, name)
            if a.size and (a.min() < 0 or a.max() >= self.n):
                raise RateError(f"{name} indices out of range [0, {self.n})")
            if np.unique(a).size != a.size:
                raise RateError(f"duplicate {name} indices")
        if np.intersect1d(self.punctured, self.shortened).size:
            raise RateError("punctured and shortened sets overlap")

    @property
    def p(self) -> int:
        return int(self.punctured.size)

    @property
    def s(self) -> int:
        return int(self.shortened.size)

    @property
    def effective_rate(self) -> float:
        return (self.k - self.s) / (self.n - self.p - self.s)

    @property
    def decoder_positions(self) -> np.ndarray:
        """Codeword indices covered by the decoder input (all but shortened)."""
        keep = np.ones(self.n, dtype=bool)
        keep[self.shortened] = False
        return np.flatnonzero(keep)

    @property
    def tx_positions(self) -> np.ndarray:
        """Codeword indices actually carried over the channel."""
        keep = np.ones(self.n, dtype=bool)
        keep[self.shortened] = False
        keep[self.punctured] = False
        return np.flatnonzero(keep)

    @property
    def n_tx(self) -> int:
        return self.n - self.p - self.s

    def decoder_llrs(self, tx_llrs: np.ndarray) -> np.ndarray:
        """Expand channel LLRs (length N-p-s) to the decoder layout (length N-s)."""
        tx_llrs = np.asarray(tx_llrs, dtype=np.float64)
        if tx_llrs.shape[-1] != self.n_tx:
            raise RateError(f"expected {self.n_tx} channel LLRs, got {tx_llrs.shape[-1]}")
        full = np.zeros(tx_llrs.shape[:-1] + (self.n,))
        full[..., self.tx_positions] = tx_llrs
        return full[..., self.decoder_positions]

    def shorten_info(self, info_bits: np.ndarray, info_positions: np.ndarray) -> np.ndarray:
        """Zero the information bits that fall on shortened positions."""
        out = np.array(info_bits, dtype=np.uint8, copy=True)
        mask = np.isin(info_positions, self.shortened)
        out[..., mask] = 0
        return out


def choose_sp(target_rate: float, code) -> RateAdaptation:
    """Puncture/shorten pattern bringing ``code`` to ``target_rate``."""
    n, k = code.N, code.K
    p, s = sp_counts(target_rate, n, k)
    punct = np.empty(0, dtype=np.int64)
    short = np.empty(0, dtype=np.int64)
    if p:
        order = code.protograph.puncturable
        pool = sum(code.positions_of_type(t).size for t in order)
        if p > pool:
            raise InfeasibleRateError(
                f"rate {target_rate} needs {p} punctured bits but only {pool} are puncturable"
            )
        chosen, left = [], p
        for t in order:
            pos = code.positions_of_type(t)
            take = min(left, pos.size)
            chosen.append(_spread(pos, take))
            left -= take
            if not left:
                break
        punct = np.sort(np.concatenate(chosen))
    if s:
        info = code.encoder.info_positions
        avail = np.setdiff1d(info, punct)
        if s > avail.size:
            raise InfeasibleRateError(f"rate {target_rate} needs {s} shortened bits, only {avail.size} available")
        short = np.sort(_spread(avail, s))
    return RateAdaptation(n, k, punct, short)
