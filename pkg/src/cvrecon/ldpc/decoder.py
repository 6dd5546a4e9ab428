"""Flooding belief-propagation decoding (sum-product or scaled min-sum)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

__all__ = ["LLR_CLIP", "TannerGraph", "DecodeResult", "decode", "decode_llrs"]

LLR_CLIP = 38.0
_PHI_FLOOR = 1e-15          # phi(1e-15) ~ 35.2, keeps phi finite
MIN_SUM_SCALE = 0.8125


@dataclass(frozen=True)
class TannerGraph:
    """Edge lists of H in check-major order, plus a variable-major permutation."""
    n: int
    m: int
    check_ptr: np.ndarray   # (m+1,)
    edge_var: np.ndarray    # (E,) variable of each check-major edge
    var_ptr: np.ndarray     # (n+1,)
    var_edges: np.ndarray   # (E,) check-major edge ids grouped by variable

    @classmethod
    def from_matrix(cls, h) -> "TannerGraph":
        h = sp.csr_matrix(h)
        h.sum_duplicates()
        h.sort_indices()
        m, n = h.shape
        check_ptr = h.indptr.astype(np.int64)
        edge_var = h.indices.astype(np.int64)
        var_edges = np.argsort(edge_var, kind="stable").astype(np.int64)
        var_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(edge_var, minlength=n), out=var_ptr[1:])
        return cls(n, m, check_ptr, edge_var, var_ptr, var_edges)

    @property
    def n_edges(self) -> int:
        return int(self.edge_var.size)


@dataclass(frozen=True)
class DecodeResult:
    hard_bits: np.ndarray
    converged: bool
    iterations_used: int
    syndrome_ok: bool


def _phi_inplace(x: np.ndarray, tmp: np.ndarray) -> np.ndarray:
    """phi(x) = -log tanh(x/2) evaluated in place with numpy's SIMD kernels."""
    np.clip(x, _PHI_FLOOR, LLR_CLIP, out=x)
    np.negative(x, out=x)
    np.exp(x, out=x)                 # t = e^{-x}
    np.subtract(1.0, x, out=tmp)
    np.multiply(x, 2.0, out=x)
    np.divide(x, tmp, out=x)
    np.log1p(x, out=x)               # log((1+t)/(1-t))
    return x


@numba.njit(cache=True)
def _syndrome_zero(check_ptr, edge_var, bits):
    for c in range(check_ptr.size - 1):
        acc = 0
        for e in range(check_ptr[c], check_ptr[c + 1]):
            acc ^= bits[edge_var[e]]
        if acc:
            return False
    return True


@numba.njit(cache=True)
def _check_stage(check_ptr, v2c, mag, sgn_out):
    """Turn phi(|v2c|) into the extrinsic phi-sum per edge; signs into sgn_out."""
    for c in range(check_ptr.size - 1):
        lo, hi = check_ptr[c], check_ptr[c + 1]
        sgn = 1.0
        total = 0.0
        for e in range(lo, hi):
            if v2c[e] < 0.0:
                sgn = -sgn
            total += mag[e]
        for e in range(lo, hi):
            sgn_out[e] = sgn if v2c[e] >= 0.0 else -sgn
            mag[e] = total - mag[e]


@numba.njit(cache=True)
def _min_sum_stage(check_ptr, v2c, c2v, scale):
    for c in range(check_ptr.size - 1):
        lo, hi = check_ptr[c], check_ptr[c + 1]
        sgn = 1.0
        m1 = np.inf
        m2 = np.inf
        arg = -1
        for e in range(lo, hi):
            a = v2c[e]
            if a < 0.0:
                sgn = -sgn
                a = -a
            if a < m1:
                m2 = m1
                m1 = a
                arg = e
            elif a < m2:
                m2 = a
        for e in range(lo, hi):
            out = m2 if e == arg else m1
            s = sgn if v2c[e] >= 0.0 else -sgn
            c2v[e] = s * scale * out


@numba.njit(cache=True)
def _variable_stage(check_ptr, edge_var, var_ptr, var_edges, llr, c2v, v2c, bits):
    """Posterior, hard decision and new extrinsic messages; returns syndrome==0."""
    for v in range(llr.size):
        lo, hi = var_ptr[v], var_ptr[v + 1]
        total = llr[v]
        for k in range(lo, hi):
            total += c2v[var_edges[k]]
        bits[v] = 1 if total < 0.0 else 0
        for k in range(lo, hi):
            e = var_edges[k]
            x = total - c2v[e]
            if x > LLR_CLIP:
                x = LLR_CLIP
            elif x < -LLR_CLIP:
                x = -LLR_CLIP
            v2c[e] = x
    return _syndrome_zero(check_ptr, edge_var, bits)


def _bp(g: "TannerGraph", llr: np.ndarray, max_iter: int, min_sum: bool):
    bits = (llr < 0).astype(np.uint8)
    if _syndrome_zero(g.check_ptr, g.edge_var, bits):
        return bits, 0, True
    v2c = llr[g.edge_var]
    c2v = np.empty_like(v2c)
    sgn = np.empty_like(v2c)
    tmp = np.empty_like(v2c)
    for it in range(1, max_iter + 1):
        if min_sum:
            _min_sum_stage(g.check_ptr, v2c, c2v, MIN_SUM_SCALE)
        else:
            np.abs(v2c, out=c2v)
            _phi_inplace(c2v, tmp)
            _check_stage(g.check_ptr, v2c, c2v, sgn)
            _phi_inplace(c2v, tmp)
            c2v *= sgn
        if _variable_stage(g.check_ptr, g.edge_var, g.var_ptr, g.var_edges,
                           llr, c2v, v2c, bits):
            return bits, it, True
    return bits, max_iter, False


def decode_llrs(graph: TannerGraph, llrs: np.ndarray, max_iter: int = 500,
                min_sum: bool = False) -> DecodeResult:
    """Decode a full-length (N) LLR vector; positive LLR means bit 0."""
    llr = np.clip(np.asarray(llrs, dtype=np.float64), -LLR_CLIP, LLR_CLIP)
    if llr.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} LLRs, got shape {llr.shape}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    bits, used, ok = _bp(graph, llr, int(max_iter), bool(min_sum))
    return DecodeResult(bits, ok, int(used), ok)


def decode(code, ra, llrs: np.ndarray, max_iter: int = 500, min_sum: bool = False) -> DecodeResult:
    """Decode rate-adapted LLRs of length N - s.

    Punctured entries are overwritten with zero; shortened positions (known
    zeros) are inserted as saturated positive LLRs.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if ra is None:
        return decode_llrs(code.graph, llrs, max_iter, min_sum)
    if llrs.shape != (ra.n - ra.s,):
        raise ValueError(f"expected {ra.n - ra.s} LLRs, got shape {llrs.shape}")
    full = np.full(ra.n, LLR_CLIP)
    full[ra.decoder_positions] = llrs
    full[ra.punctured] = 0.0
    return decode_llrs(code.graph, full, max_iter, min_sum)
