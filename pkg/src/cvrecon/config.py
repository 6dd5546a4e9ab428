"""Run configuration: one JSON document, versioned, unknown keys rejected."""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
ENV_PREFIX = "CVQKD_"

__all__ = ["ConfigError", "RunConfig", "load_config", "SCHEMA_VERSION", "ENV_PREFIX"]


class ConfigError(ValueError):
    pass


def _grid(lo, hi, step):
    return [round(float(v), 6) for v in np.arange(lo, hi + step / 2, step)]


@dataclass
class ConstellationCfg:
    order: int = 256
    nu: float | None = None          # None: smallest-penalty default
    V_A: float = 7.44


@dataclass
class ReceiverCfg:
    eta: float = 0.4
    clearance_db: float = 10.0
    xi: float = 0.0045


@dataclass
class SecurityCfg:
    block_size: int = 6_800_000
    epsilon_pe: float = 1e-10


@dataclass
class TurbulenceCfg:
    sigma_I: float = 0.0
    beta_jitter: float | None = None  # None together with no_jitter
    mean_T: float = 0.38
    no_jitter: bool = False


def _paper_turbulence():
    return [TurbulenceCfg(0.001, 123.8, 0.41), TurbulenceCfg(0.009, 8.6, 0.38),
            TurbulenceCfg(0.010, 3.0, 0.36), TurbulenceCfg(0.013, 1.6, 0.35)]


@dataclass
class CodeCfg:
    base_matrix: str | None = None   # None: bundled R = 0.2 protograph
    lift_size: int = 819
    seed: int = 1
    girth: int = 6
    lifting: str = "permutation"    # or "qc" (circulant shifts)


@dataclass
class DecoderCfg:
    max_iter: int = 100
    min_sum: bool = False


@dataclass
class FerSweepCfg:
    rate: float = 0.3
    dims: list = field(default_factory=lambda: ["biawgn", 128, 8])
    betas: list = field(default_factory=lambda: _grid(0.76, 0.94, 0.02))
    trials: int = 500
    modulation: str = "ps"           # "ps" or "gaussian"


@dataclass
class TableCfg:
    d: int = 128
    # nodes at every paper setting's mean_T and at the control's mean (0.375)
    T_grid: list = field(default_factory=lambda: [0.30, 0.33, 0.35, 0.36, 0.375, 0.38, 0.41,
                                                  0.44, 0.48])
    beta_grid: list = field(default_factory=lambda: _grid(0.75, 0.95, 0.01))
    trials: int = 100
    path: str | None = None          # persisted table to reuse


@dataclass
class CampaignCfg:
    blocks: int = 200
    frames_per_block: int = 0
    control: bool = True             # add a sigma_I = 0, no-jitter setting
    shaped_mi: bool = False          # I_AB from the PS constellation instead of Gaussian
    interpolate: bool = False        # log-FER interpolation between table SNRs


_SECTIONS = {
    "constellation": ConstellationCfg, "receiver": ReceiverCfg, "security": SecurityCfg,
    "code": CodeCfg, "decoder": DecoderCfg, "fer_sweep": FerSweepCfg, "table": TableCfg,
    "campaign": CampaignCfg,
}


@dataclass
class RunConfig:
    seed: int = 0
    workers: int | None = None
    out: str = "out"
    constellation: ConstellationCfg = field(default_factory=ConstellationCfg)
    receiver: ReceiverCfg = field(default_factory=ReceiverCfg)
    security: SecurityCfg = field(default_factory=SecurityCfg)
    turbulence: list = field(default_factory=_paper_turbulence)
    code: CodeCfg = field(default_factory=CodeCfg)
    decoder: DecoderCfg = field(default_factory=DecoderCfg)
    fer_sweep: FerSweepCfg = field(default_factory=FerSweepCfg)
    table: TableCfg = field(default_factory=TableCfg)
    campaign: CampaignCfg = field(default_factory=CampaignCfg)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}

    # builders for library objects -----------------------------------------
    def receiver_model(self):
        from .fso_channel import ReceiverModel
        return ReceiverModel(**asdict(self.receiver))

    def security_params(self):
        from .security import SecurityParams
        r = self.receiver_model()
        return SecurityParams(V_A=self.constellation.V_A, eta=r.eta, xi=r.xi, v_el=r.v_el,
                              block_size=self.security.block_size,
                              epsilon_pe=self.security.epsilon_pe)

    def turbulence_params(self, with_control: bool = False):
        from .fso_channel import TurbulenceParams
        out = []
        for t in self.turbulence:
            out.append(TurbulenceParams(t.sigma_I, math.inf if t.no_jitter else t.beta_jitter,
                                        t.mean_T, t.no_jitter))
        if with_control:
            mean = float(np.mean([t.mean_T for t in out]))
            out.append(TurbulenceParams(0.0, math.inf, round(mean, 6), no_jitter=True))
        return out

    def build_constellation(self):
        from .constellation import build_ps_qam, default_nu
        c = self.constellation
        nu = default_nu(c.order) if c.nu is None else c.nu
        return build_ps_qam(c.order, nu, c.V_A)

    def build_code(self):
        from .ldpc import default_protograph, expand_protograph, load_base_matrix
        proto = default_protograph() if self.code.base_matrix is None \
            else load_base_matrix(self.code.base_matrix)
        return expand_protograph(proto, self.code.lift_size, self.code.seed, self.code.girth,
                                 method=self.code.lifting)

    # validation -------------------------------------------------------------
    def validate(self) -> "RunConfig":
        err = []
        if not 0 <= self.seed < 2 ** 64:
            err.append("seed must be an unsigned 64-bit integer")
        if self.workers is not None and self.workers < 1:
            err.append("workers must be >= 1")
        c = self.constellation
        root = math.isqrt(c.order) if c.order > 0 else 0
        if root * root != c.order or root % 2 or c.order < 4:
            err.append(f"constellation.order {c.order} is not a square QAM order (4, 16, 64, 256, ...)")
        if c.nu is not None and c.nu < 0:
            err.append("constellation.nu must be >= 0")
        if c.V_A <= 0:
            err.append("constellation.V_A must be > 0")
        r = self.receiver
        if not 0 < r.eta <= 1:
            err.append("receiver.eta must be in (0, 1]")
        if not r.clearance_db > 0:
            err.append("receiver.clearance_db must be > 0")
        if r.xi < 0:
            err.append("receiver.xi must be >= 0")
        if self.security.block_size < 10_000:
            err.append("security.block_size must be >= 1e4 for parameter estimation")
        if not 0 < self.security.epsilon_pe < 1:
            err.append("security.epsilon_pe must be in (0, 1)")
        if not self.turbulence:
            err.append("turbulence list is empty")
        for i, t in enumerate(self.turbulence):
            if t.sigma_I < 0:
                err.append(f"turbulence[{i}].sigma_I must be >= 0")
            if not 0 < t.mean_T <= 1:
                err.append(f"turbulence[{i}].mean_T must be in (0, 1]")
            if not t.no_jitter and (t.beta_jitter is None or not t.beta_jitter > 0):
                err.append(f"turbulence[{i}].beta_jitter must be > 0, or set no_jitter")
        if self.code.lift_size < 16:
            err.append("code.lift_size must be >= 16")
        if self.code.girth not in (4, 6, 8):
            err.append("code.girth must be 4, 6 or 8")
        if self.code.lifting not in ("permutation", "qc"):
            err.append(f"code.lifting must be 'permutation' or 'qc', got {self.code.lifting!r}")
        if self.code.base_matrix is not None and not Path(self.code.base_matrix).is_file():
            err.append(f"code.base_matrix {self.code.base_matrix!r} not found")
        if self.decoder.max_iter < 1:
            err.append("decoder.max_iter must be >= 1")
        f = self.fer_sweep
        if not f.dims:
            err.append("fer_sweep.dims is empty; give e.g. [\"biawgn\", 128, 8]")
        for d in f.dims:
            if d != "biawgn" and not (isinstance(d, int) and 1 <= d <= 1024 and d & (d - 1) == 0):
                err.append(f"fer_sweep.dims entry {d!r} must be 'biawgn' or a power of two <= 1024")
        if not 0 < f.rate < 1:
            err.append("fer_sweep.rate must be in (0, 1)")
        if not f.betas or any(not 0 < b <= 1 for b in f.betas):
            err.append("fer_sweep.betas must be a non-empty list in (0, 1]")
        if f.trials < 1:
            err.append("fer_sweep.trials must be >= 1")
        if f.modulation not in ("ps", "gaussian"):
            err.append("fer_sweep.modulation must be 'ps' or 'gaussian'")
        t = self.table
        if not (isinstance(t.d, int) and 1 <= t.d <= 1024 and t.d & (t.d - 1) == 0):
            err.append("table.d must be a power of two <= 1024")
        if not t.T_grid or any(not 0 < v <= 1 for v in t.T_grid):
            err.append("table.T_grid must be a non-empty list in (0, 1]")
        if not t.beta_grid or any(not 0 < b <= 1 for b in t.beta_grid):
            err.append("table.beta_grid must be a non-empty list in (0, 1]")
        if t.trials < 1:
            err.append("table.trials must be >= 1")
        if self.campaign.blocks < 1:
            err.append("campaign.blocks must be >= 1")
        if self.campaign.frames_per_block < 0:
            err.append("campaign.frames_per_block must be >= 0")
        if err:
            raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(err))
        return self


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    return cls(**data)


def from_dict(doc: dict) -> RunConfig:
    doc = dict(doc)
    ver = doc.pop("schema_version", None)
    if ver != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {ver!r}")
    top = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(doc) - top)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    kw = {}
    for k, v in doc.items():
        if k in _SECTIONS:
            kw[k] = _build(_SECTIONS[k], v, k)
        elif k == "turbulence":
            if not isinstance(v, list):
                raise ConfigError("turbulence must be a list")
            kw[k] = [_build(TurbulenceCfg, t, f"turbulence[{i}]") for i, t in enumerate(v)]
        else:
            kw[k] = v
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None, env=None, **overrides) -> RunConfig:
    """Defaults < config file < CVQKD_* environment < explicit overrides."""
    env = os.environ if env is None else env
    path = path or env.get(ENV_PREFIX + "CONFIG")
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        cfg = from_dict(doc)
    else:
        cfg = RunConfig()
    for key, conv in (("seed", int), ("workers", int), ("out", str)):
        raw = env.get(ENV_PREFIX + key.upper())
        if raw not in (None, ""):
            try:
                setattr(cfg, key, conv(raw))
            except ValueError:
                raise ConfigError(f"{ENV_PREFIX}{key.upper()}={raw!r} is not a valid {conv.__name__}") from None
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    return cfg.validate()
