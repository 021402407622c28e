"""Matplotlib figures written next to the CSV outputs of the CLI."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _figure(width=5.0, ncols=1):
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, ncols, figsize=(width * ncols, width * golden))
    return fig, axes


def _save(fig, path):
    with plt.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(path)
    plt.close(fig)


def plot_dolp_profile(rows, path, height_m=None, brewster_distance=None):
    """DoLP of surface reflection against distance from the camera."""
    d = [r[0] for r in rows]
    p = [r[2] for r in rows]
    fig, ax = _figure()
    ax.plot(d, p, color="C0", lw=1.5)
    if brewster_distance is not None:
        ax.axvline(brewster_distance, color="C3", ls="--", lw=1, label=f"Brewster at {brewster_distance:.2f} m")
        ax.legend(frameon=False)
    ax.set_xlabel("distance on water [m]")
    ax.set_ylabel("DoLP of reflection")
    if height_m is not None:
        ax.set_title(f"camera height {height_m:g} m")
    ax.set_ylim(0, 1.02)
    _save(fig, path)


def plot_pr_curves(curves, path, title=None):
    """Raw and interpolated precision-recall curves, one colour per IoU."""
    fig, ax = _figure()
    for k, c in enumerate(curves):
        color = f"C{k}"
        if c.points:
            r, p = zip(*c.points)
            ax.plot(r, p, color=color, lw=1, alpha=0.5)
        r, p = zip(*c.envelope)
        ax.plot(r, p, color=color, lw=1.5, label=f"IoU={c.iou_thr:.2f}")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, loc="lower left")
    _save(fig, path)


def plot_box_stats(stats, path):
    """Box area histogram (log bins) beside area vs. vertical position."""
    fig, (ax0, ax1) = _figure(width=4.0, ncols=2)
    ax0.stairs(stats.hist_counts, stats.hist_edges, fill=True, color="C0", alpha=0.8)
    ax0.set_xscale("log")
    for edge, name in ((14**2, r"$14^2$"), (32**2, r"$32^2$"), (96**2, r"$96^2$")):
        ax0.axvline(edge, color="0.4", ls=":", lw=1)
        ax0.text(edge, ax0.get_ylim()[1] * 0.95, name, fontsize=7, ha="center")
    ax0.set_xlabel("box area [px$^2$]")
    ax0.set_ylabel("boxes")
    ax1.scatter(stats.y_centers, stats.areas, s=4, alpha=0.5, color="C1")
    ax1.set_yscale("log")
    ax1.set_xlabel("box centre y [px]")
    ax1.set_ylabel("box area [px$^2$]")
    ax1.set_title(f"Pearson r = {stats.pearson_r:.3f}")
    _save(fig, path)
