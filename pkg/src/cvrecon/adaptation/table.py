"""The beta -> FER lookup table and per-block beta selection."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.stats import binomtest

from .montecarlo import FerCell, quadrature_capacity, run_cells

__all__ = ["TableEntry", "BetaFerTable", "build_table", "select_beta", "SKIP", "wilson_halfwidth"]

SKIP = None          # select_beta result when no row yields a positive rate
TABLE_SCHEMA = 1


def wilson_halfwidth(failures: int, trials: int, confidence: float = 0.95) -> float:
    ci = binomtest(int(failures), int(trials)).proportion_ci(confidence, method="wilson")
    return 0.5 * (ci.high - ci.low)


@dataclass(frozen=True)
class TableEntry:
    snr: float
    beta: float
    fer: float            # after isotonic smoothing
    fer_ci: float         # Wilson half-width of the raw estimate
    fer_raw: float
    failures: int
    trials: int
    d: int | None
    code: str = ""
    available: bool = True


@dataclass
class BetaFerTable:
    entries: list[TableEntry] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def snr_grid(self) -> list[float]:
        return sorted({e.snr for e in self.entries})

    def rows_at(self, snr: float | None = None, d="any",
                interpolate: bool = False) -> list[TableEntry]:
        """Available rows at the grid SNR nearest ``snr`` (all rows if None).

        With ``interpolate``, an SNR strictly inside the grid gets rows whose
        FER is interpolated linearly in log-FER between the two neighbouring
        grid points (zero counts are floored at half a failure).
        """
        rows = [e for e in self.entries if e.available and (d == "any" or e.d == d)]
        if snr is None or not rows:
            return rows
        grid = sorted({e.snr for e in rows})
        if interpolate and grid[0] < snr < grid[-1] and snr not in grid:
            hi = next(g for g in grid if g > snr)
            lo = max(g for g in grid if g < snr)
            return _interpolated(rows, lo, hi, snr)
        near = min(grid, key=lambda g: (abs(g - snr), g))
        return sorted((e for e in rows if e.snr == near), key=lambda e: e.beta)

    def isotonic(self) -> "BetaFerTable":
        """Make FER non-decreasing in beta within each (snr, d) group."""
        out = []
        groups: dict = {}
        for e in self.entries:
            groups.setdefault((e.snr, e.d), []).append(e)
        for key in sorted(groups, key=lambda k: (k[0], -1 if k[1] is None else k[1])):
            rows = sorted(groups[key], key=lambda e: e.beta)
            ok = [e for e in rows if e.available]
            if ok:
                fit = isotonic_regression([e.fer_raw for e in ok],
                                          weights=[e.trials for e in ok], increasing=True).x
                fit = dict(zip((id(e) for e in ok), np.clip(fit, 0.0, 1.0)))
            for e in rows:
                out.append(_replace(e, fer=float(fit[id(e)])) if e.available else e)
        return BetaFerTable(out, dict(self.meta))

    # persistence ------------------------------------------------------------
    def to_json(self, path) -> None:
        doc = {"schema_version": TABLE_SCHEMA, "meta": self.meta,
               "entries": [asdict(e) for e in self.entries]}
        Path(path).write_text(json.dumps(doc, indent=1, allow_nan=True))

    @classmethod
    def from_json(cls, path) -> "BetaFerTable":
        doc = json.loads(Path(path).read_text())
        if doc.get("schema_version") != TABLE_SCHEMA:
            raise ValueError(f"unsupported table schema {doc.get('schema_version')}")
        return cls([TableEntry(**e) for e in doc["entries"]], doc.get("meta", {}))

    CSV_COLUMNS = ("snr", "beta", "d", "fer", "fer_ci", "fer_raw", "failures", "trials", "available", "code")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_COLUMNS)
            for e in self.entries:
                w.writerow([_fmt(e.snr), _fmt(e.beta), "biawgn" if e.d is None else e.d,
                            _fmt(e.fer), _fmt(e.fer_ci), _fmt(e.fer_raw), e.failures, e.trials,
                            int(e.available), e.code])


def _interpolated(rows, lo: float, hi: float, snr: float) -> list[TableEntry]:
    at_lo = {(e.beta, e.d): e for e in rows if e.snr == lo}
    at_hi = {(e.beta, e.d): e for e in rows if e.snr == hi}
    w = (snr - lo) / (hi - lo)
    out = []
    for key in sorted(set(at_lo) & set(at_hi)):
        a, b = at_lo[key], at_hi[key]
        if a.fer == 0.0 and b.fer == 0.0:
            fer = 0.0
        else:
            fa, fb = max(a.fer, 0.5 / a.trials), max(b.fer, 0.5 / b.trials)
            fer = float(min(1.0, math.exp((1 - w) * math.log(fa) + w * math.log(fb))))
        out.append(_replace(a, snr=snr, fer=fer, fer_raw=math.nan,
                            fer_ci=max(a.fer_ci, b.fer_ci)))
    return out


def _replace(e: TableEntry, **kw) -> TableEntry:
    return TableEntry(**{**asdict(e), **kw})


def _fmt(x: float) -> str:
    return "" if isinstance(x, float) and math.isnan(x) else repr(float(x))


def build_table(code, d, snr_grid, beta_grid, trials: int, seed: int, *, constellation=None,
                max_iter: int = 100, min_sum: bool = False, workers: int = 1,
                code_tag: str = "") -> BetaFerTable:
    """Monte Carlo FER for every (snr, beta) at code rate beta * I(snr) per quadrature."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not len(snr_grid) or not len(beta_grid):
        raise ValueError("snr_grid and beta_grid must be non-empty")
    cells = []
    for snr in snr_grid:
        for beta in beta_grid:
            rate = float(beta) * quadrature_capacity(float(snr))
            cells.append(FerCell(len(cells), float(snr), rate, d, int(trials)))
    results = run_cells(code, cells, seed, constellation, max_iter, min_sum, workers)
    entries = []
    for (snr, beta), r in zip(((s, b) for s in snr_grid for b in beta_grid), results):
        if r.available:
            raw = r.failures / r.trials
            entries.append(TableEntry(float(snr), float(beta), raw,
                                      wilson_halfwidth(r.failures, r.trials), raw,
                                      r.failures, r.trials, d, code_tag))
        else:
            entries.append(TableEntry(float(snr), float(beta), math.nan, math.nan, math.nan,
                                      0, r.trials, d, code_tag, available=False))
    meta = {"trials": int(trials), "seed": int(seed), "max_iter": int(max_iter),
            "min_sum": bool(min_sum), "d": d}
    return BetaFerTable(entries, meta).isotonic()


def select_beta(table: BetaFerTable, I_AB_block: float, chi_BE_block: float,
                snr: float | None = None, d="any", interpolate: bool = False):
    """Row maximising (1 - fer)(beta I_AB - chi_BE); ``SKIP`` if none is positive.

    Returns (beta, fer). Ties go to the lower beta.
    """
    rows = table.rows_at(snr, d, interpolate)
    if not rows:
        raise ValueError("table has no usable rows")
    best, best_val = SKIP, 0.0
    for e in sorted(rows, key=lambda e: e.beta):
        val = (1.0 - e.fer) * (e.beta * I_AB_block - chi_BE_block)
        if val > best_val:
            best, best_val = (e.beta, e.fer), val
    return best
