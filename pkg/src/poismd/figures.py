"""Matplotlib rendering of the CLI reports.

Each CSV-producing subcommand with curve-like output gets a companion PNG
written next to the delimited file.  Figures are presentation sugar only;
nothing downstream reads them back.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_DPI = 150


def _finite(rows, xkey, ykey):
    xs, ys = [], []
    for r in rows:
        y = r[ykey]
        if isinstance(y, float) and not math.isfinite(y):
            continue
        xs.append(r[xkey])
        ys.append(y)
    return xs, ys


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_records_figures(rows, path: str) -> None:
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    panels = [
        ("ratio_pn_lambda", "Poisson(mean) tail"),
        ("ratio_normal", "normal tail, uncorrected"),
        ("ratio_normal_corrected", "normal tail, 0.5-corrected"),
        ("ratio_pn_sigma2", "Poisson(variance) tail"),
    ]
    for ax, (key, title) in zip(axes.flat, panels):
        xs, ys = _finite(rows, "n", key)
        ax.plot(xs, ys, "o-", ms=3)
        ax.axhline(1.0, color="grey", lw=0.8, ls="--")
        ax.set_xscale("log")
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("n")
        ax.set_ylabel("exact tail / comparator tail")
    _save(fig, path)


def plot_figure5(rows, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in ("ratio1", "ratio2"):
        xs, ys = _finite(rows, "k", key)
        ax.plot(xs, ys, "o-", ms=3, label=key)
    ax.axhline(1.0, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("k")
    ax.set_ylabel("factor / naive factor")
    ax.legend()
    _save(fig, path)


def plot_example2(rows, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in ("ratio_pn_mean", "ratio_pn_mean_adjusted", "ratio_pn_variance"):
        xs, ys = _finite(rows, "n", key)
        ax.plot(xs, ys, "o-", ms=3, label=key)
    if rows:
        ax.axhline(rows[0]["limit_ratio_pn_mean"], color="grey", lw=0.8, ls=":",
                   label="limit of unadjusted ratio")
    ax.axhline(1.0, color="grey", lw=0.8, ls="--")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("exact tail / Poisson tail")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_conjecture(rows, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for lam in sorted({r["lambda"] for r in rows}):
        sub = [r for r in rows if r["lambda"] == lam]
        xs, ys = _finite(sub, "k", "log_gap")
        ax.plot(xs, ys, "o-", ms=3, label=f"lambda={lam:g}")
    ax.set_xlabel("k")
    ax.set_ylabel("ln(c1_minus - c1_plus)")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_validation(rows, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    idx = range(len(rows))
    ax.plot(idx, [max(r["abs_ratio_minus_1"], 1e-18) for r in rows], "o", ms=3,
            label="|ratio - 1|")
    ax.plot(idx, [max(r["bound_total"], 1e-18) for r in rows], "_", ms=8,
            label="bound")
    ax.set_yscale("log")
    ax.set_xlabel("case index")
    ax.legend(fontsize=8)
    _save(fig, path)
