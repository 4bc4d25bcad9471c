"""Figure rendering for the report commands.

Every CSV the CLI emits can be accompanied by a matplotlib figure written
next to it; these helpers hold the shared styling so the CLI stays thin.
The Agg backend keeps everything headless.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = [
    "save_sweep_figure",
    "save_interval_figure",
    "save_difference_figure",
    "save_sampling_figure",
]


def _finite(pairs):
    return [(x, y) for x, y in pairs if y is not None and y > 0.0 and math.isfinite(y)]


def save_sweep_figure(points, axis: str, path, protocol: str) -> None:
    """Key rate along the sweep axis with the repeaterless benchmark."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    rates = _finite([(p.axis_value, p.result.rate) for p in points])
    plob = _finite([(p.axis_value, p.plob) for p in points])
    if rates:
        ax.semilogy(*zip(*rates), "o-", color="#1f77b4", label=f"{protocol} optimized")
    if plob:
        ax.semilogy(*zip(*plob), "k-", label="repeaterless bound")
    if axis == "distance":
        ax.set_xlabel("distance (km)")
    else:
        ax.set_xscale("log")
        ax.set_xlabel("total pulse pairs N")
    ax.set_ylabel("secret key rate (bits per pulse)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_interval_figure(rows, path) -> None:
    """Expected-value bounds of the three methods against the observed count."""
    x = [r["x"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(x, x, "k-", lw=0.8, label="observed value")
    for key, label, color in (
        ("chernoff_variant", "Chernoff variant", "#d62728"),
        ("gaussian", "Gaussian", "#1f77b4"),
        ("large_deviation", "large deviation", "#2ca02c"),
    ):
        ax.plot(x, [r[f"{key}_upper"] for r in rows], color=color, ls="-", label=f"{label} upper")
        ax.plot(x, [r[f"{key}_lower"] for r in rows], color=color, ls="--", label=f"{label} lower")
    ax.set_xlabel("observed value x")
    ax.set_ylabel("expected-value bound")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_difference_figure(rows, path) -> None:
    """Bound-minus-observed differences (the tightness comparison)."""
    x = [r["x"] for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0), sharex=True)
    for key, label, color in (
        ("chernoff_variant", "Chernoff variant", "#d62728"),
        ("gaussian", "Gaussian", "#1f77b4"),
        ("large_deviation", "large deviation", "#2ca02c"),
    ):
        axes[0].plot(x, [r[f"{key}_upper"] - r["x"] for r in rows], color=color, label=label)
        axes[1].plot(x, [r["x"] - r[f"{key}_lower"] for r in rows], color=color, label=label)
    axes[0].set_ylabel("upper bound - observed")
    axes[1].set_ylabel("observed - lower bound")
    for ax in axes:
        ax.set_xlabel("observed value x")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sampling_figure(rows, path) -> None:
    """Sampling-deviation comparison over the sample size."""
    k = [r["k"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.semilogx(k, [r["gamma_exact"] for r in rows], "#d62728", label="exact root (upper)")
    ax.semilogx(k, [r["gamma_fung"] for r in rows], "#2ca02c", label="entropy-form root")
    analytic = [(kk, r["gamma_analytic"]) for kk, r in zip(k, rows) if r["gamma_analytic"] is not None]
    if analytic:
        ax.semilogx(*zip(*analytic), "#1f77b4", label="analytic approximation")
    ax.semilogx(k, [r["gamma_lower"] for r in rows], "#d62728", ls="--", label="exact root (lower)")
    ax.set_xlabel("sample size k")
    ax.set_ylabel("deviation gamma")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
