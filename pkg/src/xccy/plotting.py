"""Figure rendering for the report outputs.

Figures are written next to the delimited output with fixed metadata so a
given config and seed reproduce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .backtest import BacktestResult

_SAVE_KWARGS = {"dpi": 130, "metadata": {"Software": "xccy"}}


def save_pnl_figure(result: BacktestResult, path: Path, title: str) -> None:
    """Sample P&L paths with the interquartile band, mirroring the study plots."""
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    t = result.times
    for row in result.sample_pnl:
        ax.plot(t, row, lw=0.6, alpha=0.45, color="#4878a8")
    ax.plot(t, result.profile.q25, color="#b2182b", lw=1.6, label="25% / 75% quantiles")
    ax.plot(t, result.profile.q75, color="#b2182b", lw=1.6)
    ax.plot(t, result.profile.q50, color="#222222", lw=1.2, ls="--", label="median")
    ax.set_xlabel("time (years)")
    ax.set_ylabel("P&L (AUD)")
    ax.set_title(title)
    ax.legend(loc="upper left", frameon=False)
    ax.grid(alpha=0.3, lw=0.5)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_quantile_comparison(results: dict, path: Path, title: str) -> None:
    """Overlay of 25%/75% quantile bands across rebalancing frequencies."""
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    colors = plt.cm.viridis(np.linspace(0.0, 0.85, len(results)))
    for color, (name, result) in zip(colors, results.items()):
        ax.plot(result.times, result.profile.q25, color=color, lw=1.3, label=name)
        ax.plot(result.times, result.profile.q75, color=color, lw=1.3)
    ax.set_xlabel("time (years)")
    ax.set_ylabel("P&L quantiles (AUD)")
    ax.set_title(title)
    ax.legend(loc="upper left", frameon=False, ncols=2)
    ax.grid(alpha=0.3, lw=0.5)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_sensitivity_figure(param: str, values, spreads_bps, path: Path) -> None:
    """Fair basis spread against the swept parameter."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.plot(values, spreads_bps, marker="o", color="#2166ac")
    ax.set_xlabel(param)
    ax.set_ylabel("fair basis spread (bps)")
    ax.set_title(f"Fair spread sensitivity: {param}")
    ax.grid(alpha=0.3, lw=0.5)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
