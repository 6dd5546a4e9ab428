"""Turbulent free-space quantum channel with a trusted heterodyne receiver.

Fading model: T = T_ceiling * I_s * I_p, with I_s a unit-mean log-normal
scintillation factor (normalised variance sigma_I) and I_p a pointing-loss
factor of density beta * u**(beta - 1) on (0, 1].
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ChannelError", "EstimationError", "TurbulenceParams", "ReceiverModel", "QuantumBlock",
    "PAPER_SETTINGS", "sample_fading", "sample_transmittance", "transmit",
    "generate_block", "estimate_channel", "estimate_stderr", "save_block", "load_block",
]


class ChannelError(ValueError):
    pass


class EstimationError(ChannelError):
    pass


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


@dataclass(frozen=True)
class TurbulenceParams:
    sigma_I: float
    beta_jitter: float = math.inf
    mean_T: float = 0.38
    no_jitter: bool = False

    def __post_init__(self):
        if not self.sigma_I >= 0:
            raise ChannelError(f"sigma_I must be >= 0, got {self.sigma_I}")
        if not self.no_jitter and not (0 < self.beta_jitter < math.inf):
            raise ChannelError("beta_jitter must be finite and > 0 (use no_jitter=True for a steady beam)")
        if not 0 < self.mean_T <= 1:
            raise ChannelError(f"mean_T must be in (0, 1], got {self.mean_T}")

    @property
    def ceiling(self) -> float:
        """Transmittance with unit scintillation and no pointing loss."""
        if self.no_jitter:
            return self.mean_T
        return self.mean_T * (self.beta_jitter + 1.0) / self.beta_jitter


# measured weak-turbulence settings; the mean transmittances are spread over
# the reported range, stronger turbulence paired with lower T
PAPER_SETTINGS = (
    TurbulenceParams(0.001, 123.8, 0.41),
    TurbulenceParams(0.009, 8.6, 0.38),
    TurbulenceParams(0.010, 3.0, 0.36),
    TurbulenceParams(0.013, 1.6, 0.35),
)


@dataclass(frozen=True)
class ReceiverModel:
    eta: float = 0.4
    clearance_db: float = 10.0
    xi: float = 0.0045

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ChannelError("eta must be in (0, 1]")
        if not self.clearance_db > 0:
            raise ChannelError("clearance_db must be > 0 (inf means no electronic noise)")
        if not self.xi >= 0:
            raise ChannelError("xi must be >= 0")

    @property
    def v_el(self) -> float:
        return 0.0 if math.isinf(self.clearance_db) else 10.0 ** (-self.clearance_db / 10.0)

    def noise_variance(self, T: float) -> float:
        """Per-quadrature noise at the heterodyne output (SNU)."""
        return 1.0 + self.eta * T * self.xi / 2.0 + self.v_el

    def gain(self, T: float) -> float:
        return math.sqrt(self.eta * T / 2.0)


@dataclass
class QuantumBlock:
    x: np.ndarray
    y: np.ndarray
    T_block: float
    receiver: ReceiverModel = field(default_factory=ReceiverModel)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.shape != self.y.shape or self.x.ndim != 1 or self.x.size % 2:
            raise ChannelError("x and y must be equal-length 1-D arrays of interleaved quadratures")
        if not 0 <= self.T_block <= 1:
            raise ChannelError("T_block must be in [0, 1]")

    @property
    def block_size(self) -> int:
        return self.x.size // 2


def sample_fading(p: TurbulenceParams, n: int, seed=None):
    """Raw fading draws: (T, I_s, I_p) before any mean correction."""
    rng = _rng(seed)
    s2 = math.log1p(p.sigma_I)
    i_s = np.exp(rng.normal(-s2 / 2.0, math.sqrt(s2), n)) if s2 > 0 else np.ones(n)
    if p.no_jitter:
        i_p = np.ones(n)
    else:
        i_p = 1.0 - rng.random(n)            # (0, 1]
        i_p **= 1.0 / p.beta_jitter
    return p.ceiling * i_s * i_p, i_s, i_p


def sample_transmittance(p: TurbulenceParams, n_blocks: int, seed=None) -> np.ndarray:
    """Per-block transmittances in (0, 1]; for n_blocks > 1 the sample mean is set to mean_T."""
    if n_blocks < 1:
        raise ChannelError("n_blocks must be >= 1")
    t, _, _ = sample_fading(p, n_blocks, seed)
    t = np.clip(t, np.finfo(float).tiny, 1.0)
    if n_blocks > 1 and np.ptp(t) > 0:
        t *= p.mean_T / t.mean()
        t = np.minimum(t, 1.0)
    return t


def transmit(x: np.ndarray, T_block: float, r: ReceiverModel, seed=None) -> np.ndarray:
    """Bob's heterodyne outputs for Alice's interleaved quadratures ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ChannelError("x contains non-finite values")
    if not 0 < T_block <= 1:
        raise ChannelError("T_block must be in (0, 1]")
    rng = _rng(seed)
    return r.gain(T_block) * x + rng.normal(0.0, math.sqrt(r.noise_variance(T_block)), x.shape)


def generate_block(c, p: TurbulenceParams, r: ReceiverModel, block_size: int, seed=None,
                   T_block: float | None = None) -> QuantumBlock:
    """One fading realisation and the paired (x, y) record of a block."""
    from .constellation import sample_symbols, to_quadratures

    if block_size < 1:
        raise ChannelError("block_size must be >= 1")
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    s_sym, s_fade, s_noise = ss.spawn(3)
    if T_block is None:
        T_block = float(sample_transmittance(p, 1, np.random.default_rng(s_fade))[0])
    x = to_quadratures(sample_symbols(c, block_size, np.random.default_rng(s_sym)))
    y = transmit(x, T_block, r, np.random.default_rng(s_noise))
    meta = {"turbulence": asdict(p), "seed": None if seed is None else str(ss.entropy)}
    return QuantumBlock(x, y, T_block, r, meta)


def _fit(b: QuantumBlock):
    if b.block_size < 10_000:
        raise EstimationError("parameter estimation needs at least 1e4 symbols")
    sxx = float(b.x @ b.x)
    if sxx <= 0:
        raise EstimationError("x has zero energy")
    a = float(b.x @ b.y) / sxx
    resid = b.y - a * b.x
    s2 = float(resid @ resid) / b.x.size
    return a, s2, sxx / b.x.size


def estimate_channel(b: QuantumBlock, receiver: ReceiverModel | None = None) -> tuple[float, float]:
    """Maximum-likelihood (T_hat, xi_hat) from the block's (x, y) pairs."""
    r = receiver or b.receiver
    a, s2, _ = _fit(b)
    T_hat = 2.0 * a * a / r.eta
    if T_hat <= 0:
        raise EstimationError("estimated transmittance is zero")
    xi_hat = 2.0 * (s2 - 1.0 - r.v_el) / (r.eta * T_hat)
    return T_hat, xi_hat


def estimate_stderr(b: QuantumBlock, receiver: ReceiverModel | None = None) -> tuple[float, float]:
    """Asymptotic standard errors of (T_hat, xi_hat)."""
    r = receiver or b.receiver
    a, s2, vx = _fit(b)
    m = b.x.size
    sd_a = math.sqrt(s2 / (m * vx))
    sd_s2 = s2 * math.sqrt(2.0 / m)
    T_hat = 2.0 * a * a / r.eta
    xi_hat = 2.0 * (s2 - 1.0 - r.v_el) / (r.eta * T_hat)
    sd_T = 4.0 * abs(a) * sd_a / r.eta
    sd_xi = math.hypot(2.0 * sd_s2 / (r.eta * T_hat), xi_hat * sd_T / T_hat)
    return sd_T, sd_xi


def save_block(b: QuantumBlock, path, fmt: str = "bin") -> Path:
    """Write (x, y) pairs plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    pairs = np.column_stack([b.x, b.y])
    if fmt == "bin":
        pairs.astype("<f8").tofile(path)
    elif fmt == "csv":
        np.savetxt(path, pairs, delimiter=",", header="x,y", comments="", fmt="%.17g")
    else:
        raise ValueError("fmt must be 'bin' or 'csv'")
    side = {"format": fmt, "T_block": b.T_block, "block_size": b.block_size,
            "receiver": asdict(b.receiver), "meta": b.meta}
    path.with_name(path.name + ".json").write_text(json.dumps(side, indent=2, default=str))
    return path


def load_block(path) -> QuantumBlock:
    path = Path(path)
    side = json.loads(path.with_name(path.name + ".json").read_text())
    if side["format"] == "bin":
        pairs = np.fromfile(path, dtype="<f8").reshape(-1, 2)
    else:
        pairs = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    rec = side["receiver"]
    return QuantumBlock(pairs[:, 0].copy(), pairs[:, 1].copy(), side["T_block"],
                        ReceiverModel(**rec), side["meta"])
