"""Log-log SVG plots of the report tables (needs matplotlib)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _read(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _loglog(ax, x, y, label):
    x, y = np.asarray(x, float), np.abs(np.asarray(y, float))
    ax.loglog(x, y, "o", ms=4, label=label)
    keep = y > 0
    if keep.sum() >= 2:
        s, b = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
        ax.loglog(x, np.exp(b) * x**s, "-", lw=1, label=f"slope {s:.3f}")


def write_plots(out: Path) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "spdeweak"
    written = []

    def save(fig, name):
        fig.tight_layout()
        fig.savefig(out / name, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(name)

    rows = _read(out / "criterion5_sweeps.csv")
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for scheme, ax, xlabel in (("spectral", axes[0], "lambda_N"), ("temporal", axes[1], "M (dt = 1/M^2)")):
        for a in sorted({r["alpha"] for r in rows}):
            sel = [r for r in rows if r["scheme"] == scheme and r["alpha"] == a]
            _loglog(ax, [r["abscissa"] for r in sel], [r["weak_error"] for r in sel], f"alpha={a}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("|weak error|")
        ax.legend(fontsize=7)
    save(fig, "lipschitz_rates.svg")

    rows = _read(out / "criterion6_gauss_exp.csv")
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for scheme, ax, xlabel in (("spectral", axes[0], "N"), ("temporal", axes[1], "dt")):
        sel = [r for r in rows if r["scheme"] == scheme]
        _loglog(ax, [r["abscissa"] for r in sel], [r["weak_error"] for r in sel], "exp(-|x|^2)")
        ax.set_xlabel(xlabel)
        ax.legend(fontsize=7)
    save(fig, "smooth_rates.svg")

    rows = _read(out / "criterion7_closed_form.csv")
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for scheme, ax, xlabel in (("spectral", axes[0], "N"), ("temporal", axes[1], "dt")):
        sel = [r for r in rows if r["scheme"] == scheme]
        _loglog(ax, [r["h"] for r in sel], [r["strong_error"] for r in sel], "E|X - X_h|^2")
        ax.set_xlabel(xlabel)
        ax.legend(fontsize=7)
    save(fig, "strong_rates.svg")
    return written
