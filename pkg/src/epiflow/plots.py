"""SVG figure rendering (deterministic: fixed hash salt, no embedded date)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "epiflow"

import matplotlib.pyplot as plt
import numpy as np

_SAVEFIG_KW = {"format": "svg", "metadata": {"Date": None}}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
    return path


def plot_cycle_comparison(cine_curve, epi_cycle, path) -> Path:
    """Overlaid 32-point CINE curve and EPI reconstruction with error bars."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    idx = np.arange(len(cine_curve.flows))
    ax.plot(idx, cine_curve.flows, "o-", color="tab:blue", label="CINE-PC")
    ax.errorbar(idx, epi_cycle.flows, yerr=epi_cycle.sds, fmt="s-",
                color="tab:red", capsize=3, label="EPI-PC (reconstructed)")
    ax.set_xlabel("cycle sample index")
    ax.set_ylabel("flow (mm$^3$/s)")
    ax.set_title("Average cycle: CINE vs reconstructed EPI")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def plot_bland_altman(result, path) -> Path:
    """Difference-vs-mean scatter with mean difference and LoA lines."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.scatter(result.pair_means, result.diffs, color="tab:purple", zorder=3)
    ax.axhline(result.mean_diff, color="red",
               label=f"mean diff = {result.mean_diff:.1f}")
    for y, name in ((result.loa_low, "LoA low"), (result.loa_high, "LoA high")):
        ax.axhline(y, color="gray", linestyle="--", label=f"{name} = {y:.1f}")
    ax.set_xlabel("pair mean (mm$^3$/s)")
    ax.set_ylabel("difference EPI $-$ CINE (mm$^3$/s)")
    ax.set_title("Bland-Altman: EPI vs CINE cycle points")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def plot_sweep(records, gold_flow, gold_area, tolerance_percent, path) -> Path:
    """Area-vs-flow scatter, colored by mode and shaded by pixel size, with
    the two confidence intervals drawn as bands."""
    fig, ax = plt.subplots(figsize=(7, 5))
    ok = [r for r in records if r.ok]
    sizes = sorted({r.pixel_size for r in ok})
    tol = tolerance_percent / 100.0
    ax.axvspan(gold_area * (1 - tol), gold_area * (1 + tol),
               color="purple", alpha=0.12, label="area CI")
    ax.axhspan(gold_flow * (1 - tol), gold_flow * (1 + tol),
               color="green", alpha=0.12, label="flow CI")
    cmaps = {"EPI": plt.get_cmap("Reds"), "CINE": plt.get_cmap("Blues")}
    for mode in ("CINE", "EPI"):
        for px in sizes:
            pts = [r for r in ok if r.mode == mode and r.pixel_size == px]
            if not pts:
                continue
            shade = 0.3 + 0.65 * (sizes.index(px) / max(len(sizes) - 1, 1))
            ax.scatter([r.area for r in pts], [r.mean_flow for r in pts],
                       color=cmaps[mode](shade), edgecolor="none", s=30,
                       label=f"{mode} {px:g} mm" if px in (sizes[0], sizes[-1]) else None)
    ax.set_xlabel("segmentation area (mm$^2$)")
    ax.set_ylabel("average flow (mm$^3$/s)")
    ax.set_title("Pixel-size sweep: area vs average flow")
    ax.legend(fontsize=7, ncol=2)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)
