"""Figures rendered from the CSV files the CLI writes."""
from __future__ import annotations

import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["plot_fer_sweep", "plot_campaign"]


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(v):
    return float(v) if v not in ("", None) else float("nan")


def plot_fer_sweep(csv_path, png_path) -> None:
    curves = defaultdict(list)
    for r in _read(csv_path):
        curves[r["curve"]].append((_num(r["beta"]), _num(r["fer"]), _num(r["fer_ci_low"]),
                                   _num(r["fer_ci_high"])))
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for name, pts in curves.items():
        pts.sort()
        b, f, lo, hi = zip(*pts)
        ax.errorbar(b, f, yerr=[[fi - l for fi, l in zip(f, lo)], [h - fi for fi, h in zip(f, hi)]],
                    marker="o", ms=3, capsize=2, label=name)
    ax.set_yscale("log")
    ax.set_xlabel("reconciliation efficiency β")
    ax.set_ylabel("FER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def plot_campaign(csv_path, png_path) -> None:
    """Mean SKR versus fixed beta per setting, adaptive mean as a dashed line."""
    fixed = defaultdict(lambda: defaultdict(list))
    adaptive = defaultdict(list)
    label = {}
    for r in _read(csv_path):
        sid = int(r["setting_id"])
        label[sid] = f"σI={r['sigma_I']}, βj={r['beta_jitter']}"
        if r["mode"] == "fixed":
            fixed[sid][_num(r["beta"])].append(_num(r["skr"]))
        else:
            adaptive[sid].append(_num(r["skr"]))
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for sid in sorted(fixed):
        betas = sorted(fixed[sid])
        means = [sum(fixed[sid][b]) / len(fixed[sid][b]) for b in betas]
        line, = ax.plot(betas, means, marker="o", ms=3, label=label[sid])
        ax.axhline(sum(adaptive[sid]) / len(adaptive[sid]), ls="--", color=line.get_color())
    ax.set_xlabel("reconciliation efficiency β")
    ax.set_ylabel("SKR (bits/symbol)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
