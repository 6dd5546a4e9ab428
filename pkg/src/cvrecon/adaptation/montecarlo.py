"""Frame-error Monte Carlo shared by table building and FER sweeps.

Every trial draws from its own ``SeedSequence(seed, spawn_key=(cell, trial))``
so results are independent of batching and of the number of worker processes.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import mdr
from ..ldpc import choose_sp, decode, verify
from ..ldpc.rate import RateError

__all__ = ["FerCell", "CellResult", "run_frame", "run_cell", "run_cells",
           "quadrature_capacity", "default_workers"]


def quadrature_capacity(snr: float) -> float:
    """Gaussian-channel capacity per real dimension (bits)."""
    return 0.5 * math.log2(1.0 + snr)


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


@dataclass(frozen=True)
class FerCell:
    index: int
    snr: float
    rate: float
    d: int | None          # None: direct BI-AWGN LLRs, no reconciliation map
    trials: int


@dataclass(frozen=True)
class CellResult:
    cell: FerCell
    failures: int
    trials: int
    available: bool
    mean_iterations: float

    @property
    def fer(self) -> float:
        return self.failures / self.trials if self.available else math.nan


def channel_llrs(d, tx_bits: np.ndarray, snr: float, rng, constellation=None) -> np.ndarray:
    """LLRs Alice obtains for Bob's transmitted bits at per-dimension ``snr``."""
    n = tx_bits.size
    if d is None:
        x = 1.0 - 2.0 * tx_bits
        y = math.sqrt(snr) * x + rng.standard_normal(n)
        return 2.0 * math.sqrt(snr) * y
    pad = (-n) % d
    bits = np.concatenate([tx_bits, rng.integers(0, 2, pad, dtype=np.uint8)]) if pad else tx_bits
    _, llr = mdr.virtual_channel_llrs(d, bits.size, snr, rng, constellation, bits=bits,
                                      use_norm_x=True)
    return llr[:n]


def run_frame(code, ra, d, snr, rng, constellation=None, max_iter=100, min_sum=False):
    """One frame; returns (success, iterations)."""
    enc = code.encoder
    info = ra.shorten_info(rng.integers(0, 2, enc.k, dtype=np.uint8), enc.info_positions)
    cw = enc.encode(info)
    llr = channel_llrs(d, cw[ra.tx_positions], snr, rng, constellation)
    res = decode(code, ra, ra.decoder_llrs(llr), max_iter, min_sum)
    ok = res.converged and verify(info, res.hard_bits[enc.info_positions])
    return ok, res.iterations_used


# worker-process state, installed once per process
_STATE: dict = {}


def _init(code, seed, constellation, max_iter, min_sum):
    _STATE.update(code=code, seed=seed, constellation=constellation,
                  max_iter=max_iter, min_sum=min_sum, ra={})


def _ra_for(rate):
    cache = _STATE["ra"]
    if rate not in cache:
        cache[rate] = choose_sp(rate, _STATE["code"])
    return cache[rate]


def _run(cell: FerCell) -> CellResult:
    try:
        ra = _ra_for(cell.rate)
    except RateError:
        return CellResult(cell, 0, cell.trials, False, math.nan)
    fails, iters = 0, 0
    for t in range(cell.trials):
        rng = np.random.default_rng(np.random.SeedSequence(_STATE["seed"], spawn_key=(cell.index, t)))
        ok, it = run_frame(_STATE["code"], ra, cell.d, cell.snr, rng, _STATE["constellation"],
                           _STATE["max_iter"], _STATE["min_sum"])
        fails += not ok
        iters += it
    return CellResult(cell, fails, cell.trials, True, iters / max(cell.trials, 1))


def run_cell(code, cell: FerCell, seed: int, constellation=None, max_iter=100, min_sum=False):
    _init(code, seed, constellation, max_iter, min_sum)
    return _run(cell)


def run_cells(code, cells, seed: int, constellation=None, max_iter: int = 100,
              min_sum: bool = False, workers: int = 1) -> list[CellResult]:
    """Evaluate cells, in parallel when ``workers > 1``; output keeps input order."""
    cells = list(cells)
    args = (code, int(seed), constellation, int(max_iter), bool(min_sum))
    if workers <= 1 or len(cells) <= 1:
        _init(*args)
        return [_run(c) for c in cells]
    code.encoder, code.graph  # build lazily-cached parts before pickling
    with ProcessPoolExecutor(max_workers=workers, initializer=_init, initargs=args) as ex:
        return list(ex.map(_run, cells))
