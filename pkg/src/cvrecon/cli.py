"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 runtime failure, 4 failed validation.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ENV_PREFIX, ConfigError, RunConfig, load_config

log = logging.getLogger("cvrecon")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VALIDATION = 0, 2, 3, 4
FER_COLUMNS = ("curve", "d", "beta", "snr", "rate", "effective_rate", "punctured", "shortened",
               "trials", "failures", "fer", "fer_ci_low", "fer_ci_high", "mean_iterations")


class ValidationFailed(RuntimeError):
    pass


def _workers(cfg: RunConfig) -> int:
    from .adaptation.montecarlo import default_workers
    return cfg.workers or default_workers()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(round(v, 12))
    return v


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _write_manifest(out: Path, command: str, cfg: RunConfig, outputs, extra=None) -> None:
    files = {}
    for p in outputs:
        p = Path(p)
        files[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    doc = {
        "command": command,
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "outputs": files,
        "reproduce": f"cvrecon {command} --config config.json --out <dir>",
    }
    if extra:
        doc.update(extra)
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, default=str) + "\n")
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


# --- subcommands -------------------------------------------------------------

def cmd_fer_sweep(cfg: RunConfig, out: Path, plots: bool = True) -> list[Path]:
    from .adaptation.montecarlo import FerCell, run_cells
    from .adaptation.table import wilson_halfwidth
    from .ldpc import choose_sp
    from scipy.stats import binomtest

    f = cfg.fer_sweep
    code = cfg.build_code()
    ra = choose_sp(f.rate, code)
    constellation = cfg.build_constellation() if f.modulation == "ps" else None
    cells, labels = [], []
    for d in f.dims:
        for beta in f.betas:
            snr = 2.0 ** (2.0 * f.rate / beta) - 1.0
            cells.append(FerCell(len(cells), snr, f.rate, None if d == "biawgn" else int(d), f.trials))
            labels.append(("BI-AWGN" if d == "biawgn" else f"d={d}", d, beta))
    log.info("fer-sweep: %d cells x %d trials, %d workers", len(cells), f.trials, _workers(cfg))
    res = run_cells(code, cells, cfg.seed, constellation, cfg.decoder.max_iter,
                    cfg.decoder.min_sum, _workers(cfg))
    rows = []
    for (name, d, beta), r in zip(labels, res):
        ci = binomtest(r.failures, r.trials).proportion_ci(0.95, method="wilson")
        rows.append([name, d, beta, r.cell.snr, f.rate, ra.effective_rate, ra.p, ra.s, r.trials,
                     r.failures, r.fer, ci.low, ci.high, r.mean_iterations])
    path = _write_csv(out / "fer_sweep.csv", FER_COLUMNS, rows)
    outputs = [path]
    if plots:
        from .plotting import plot_fer_sweep
        plot_fer_sweep(path, out / "fer_sweep.png")
        outputs.append(out / "fer_sweep.png")
    _write_manifest(out, "fer-sweep", cfg, [path])
    return outputs


def _table_snr_grid(cfg: RunConfig):
    from .security import snr_of
    p = cfg.security_params()
    return [round(snr_of(p, T), 12) for T in cfg.table.T_grid]


def cmd_table_build(cfg: RunConfig, out: Path, plots: bool = True) -> list[Path]:
    from .adaptation import build_table
    t = cfg.table
    code = cfg.build_code()
    table = build_table(code, t.d, _table_snr_grid(cfg), t.beta_grid, t.trials, cfg.seed,
                        constellation=cfg.build_constellation(), max_iter=cfg.decoder.max_iter,
                        min_sum=cfg.decoder.min_sum, workers=_workers(cfg),
                        code_tag=f"{code.protograph.name}/Z{code.lift_size}/s{code.seed}")
    table.meta["T_grid"] = list(t.T_grid)
    table.to_json(out / "beta_fer_table.json")
    table.to_csv(out / "beta_fer_table.csv")
    outputs = [out / "beta_fer_table.csv", out / "beta_fer_table.json"]
    _write_manifest(out, "table-build", cfg, outputs)
    return outputs


def _load_or_build_table(cfg: RunConfig, out: Path):
    from .adaptation import BetaFerTable
    for cand in (cfg.table.path, out / "beta_fer_table.json"):
        if cand and Path(cand).is_file():
            log.info("using persisted table %s", cand)
            return BetaFerTable.from_json(cand), str(cand)
    log.info("no persisted table found; building one")
    cmd_table_build(cfg, out)
    return BetaFerTable.from_json(out / "beta_fer_table.json"), str(out / "beta_fer_table.json")


def cmd_skr_campaign(cfg: RunConfig, out: Path, plots: bool = True) -> list[Path]:
    from .adaptation import run_campaign
    table, table_path = _load_or_build_table(cfg, out)
    c = cfg.campaign
    code = cfg.build_code() if c.frames_per_block else None
    report = run_campaign(cfg.turbulence_params(with_control=c.control), c.blocks, table,
                          security=cfg.security_params(), seed=cfg.seed, d=cfg.table.d,
                          constellation=cfg.build_constellation(), code=code,
                          frames_per_block=c.frames_per_block, max_iter=cfg.decoder.max_iter,
                          workers=_workers(cfg), shaped_mi=c.shaped_mi,
                          interpolate=c.interpolate)
    report.write_csv(out / "campaign.csv")
    report.write_summary(out / "campaign_summary.csv")
    outputs = [out / "campaign.csv", out / "campaign_summary.csv"]
    for s in report.summaries:
        log.info("setting %d: best fixed beta %.2f skr %.4g, adaptive %.4g, gain %+.2f%% (±%.2f%%)",
                 s.setting_id, s.best_fixed_beta, s.best_fixed_skr, s.adaptive_mean,
                 100 * s.gain, 100 * s.gain_ci)
    if plots:
        from .plotting import plot_campaign
        plot_campaign(out / "campaign.csv", out / "skr_vs_beta.png")
    _write_manifest(out, "skr-campaign", cfg, outputs, {"table": table_path})
    return outputs + ([out / "skr_vs_beta.png"] if plots else [])


def cmd_dump_code(cfg: RunConfig, out: Path, plots: bool = True) -> list[Path]:
    from .constellation import write_constellation_csv
    from .ldpc import export_h, load_h, save_base_matrix
    code = cfg.build_code()
    h_path = out / "parity_check.txt"
    export_h(code, h_path)
    if (load_h(h_path) != code.parity_check).nnz:
        raise RuntimeError("exported parity-check matrix does not round-trip")
    save_base_matrix(code.protograph, out / "base_matrix.txt")
    write_constellation_csv(cfg.build_constellation(), out / "constellation.csv")
    outputs = [h_path, out / "base_matrix.txt", out / "constellation.csv"]
    _write_manifest(out, "dump-code", cfg, outputs,
                    {"code": {"N": code.N, "M": code.M, "girth": code.girth, "lifting": code.method,
                              "lift_size": code.lift_size}})
    return outputs


def cmd_validate(cfg: RunConfig, out: Path, plots: bool = True) -> list[Path]:
    from .validation import run_checks
    results = run_checks(cfg)
    path = _write_csv(out / "validate.csv", ("check", "passed", "detail"),
                      [(n, int(ok), d) for n, ok, d in results])
    for n, ok, d in results:
        print(f"{'PASS' if ok else 'FAIL'}  {n}: {d}")
    _write_manifest(out, "validate", cfg, [path])
    if not all(ok for _, ok, _ in results):
        raise ValidationFailed(f"{sum(not ok for _, ok, _ in results)} check(s) failed")
    return [path]


COMMANDS = {
    "fer-sweep": cmd_fer_sweep,
    "skr-campaign": cmd_skr_campaign,
    "table-build": cmd_table_build,
    "validate": cmd_validate,
    "dump-code": cmd_dump_code,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cvrecon", description="CV-QKD reverse-reconciliation and key-rate simulator.",
                                 epilog=f"Environment overrides: {ENV_PREFIX}CONFIG, {ENV_PREFIX}SEED, "
                                        f"{ENV_PREFIX}WORKERS, {ENV_PREFIX}OUT.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--workers", type=int, help="worker processes (default: available cores)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--no-plots", action="store_true", help="skip PNG rendering")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, workers=args.workers, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    t0 = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[args.command](cfg, out, not args.no_plots)
    except ValidationFailed as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure class
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in outputs:
        print(p)
    log.info("%s finished in %.1f s", args.command, time.perf_counter() - t0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
