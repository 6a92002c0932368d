"""Matplotlib renderings of the standard reports, written next to the CSVs.

All renderers are headless (Agg) and strip volatile PNG metadata so repeated
runs with the same inputs produce identical bytes.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "shape_figure",
    "field_figure",
    "herd_immunity_figure",
    "layer_comparison_figure",
    "radial_profile_figure",
    "growth_gap_figure",
]

_SAVE_KW = dict(dpi=130, metadata={"Software": None})


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def shape_figure(curve, path) -> None:
    """Limiting frontier shape as a closed curve in the plane."""
    phis = np.array([p for p, _ in curve.samples])
    ups = np.array([u for _, u in curve.samples])
    xs = ups * np.cos(phis)
    ys = ups * np.sin(phis)
    xs = np.append(xs, xs[0])
    ys = np.append(ys, ys[0])
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    ax.plot(xs, ys, lw=1.5)
    lim = 1.08
    ax.plot([-1, 0, 1, 0, -1], [0, 1, 0, -1, 0], ls=":", lw=0.8, color="gray")
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.set_xlabel("x / t")
    ax.set_ylabel("y / t")
    ax.set_title(f"frontier speed, theta = {curve.theta:g}")
    _finish(fig, path)


def field_figure(field, path, scale: float = 1.0, overlay=None, title: str = "") -> None:
    """Heatmap of a lattice field; ``overlay`` is an (x, y) polyline (the
    predicted frontier) drawn in pink on top."""
    w = field.window
    img = np.clip(field.data.astype(np.float64) * scale, 0.0, 1.0).T[::-1, :]
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    im = ax.imshow(
        img,
        extent=(w.x_lo - 0.5, w.x_hi + 0.5, w.y_lo - 0.5, w.y_hi + 0.5),
        cmap="viridis",
        vmin=0.0,
        vmax=1.0,
        interpolation="nearest",
    )
    if overlay is not None:
        ox = [p[0] for p in overlay] + [overlay[0][0]]
        oy = [p[1] for p in overlay] + [overlay[0][1]]
        ax.plot(ox, oy, color="hotpink", lw=1.4)
    fig.colorbar(im, ax=ax, shrink=0.85)
    if title:
        ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    _finish(fig, path)


def herd_immunity_figure(thetas, iotas, herd, path) -> None:
    """Ultimate infection proportion against the vaccination threshold."""
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    ax.plot(thetas, iotas, label="ultimate infection proportion", lw=1.6)
    ax.plot(thetas, herd, label="required vaccination proportion", lw=1.6, ls="--")
    ax.set_xlabel("theta")
    ax.set_ylabel("proportion")
    ax.set_ylim(0.0, 1.02)
    ax.legend(loc="lower right", fontsize=9)
    _finish(fig, path)


def layer_comparison_figure(layers, empirical, reference, path, err=None) -> None:
    """Observed layer proportions (black) against the predicted levels (red)."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(layers, empirical, "o-", color="black", label="simulation", lw=1.2, ms=4)
    if err is not None:
        ax.errorbar(layers, empirical, yerr=err, fmt="none", ecolor="black", capsize=2)
    ax.plot(layers, reference, "s--", color="red", label="predicted levels", lw=1.2, ms=4)
    ax.set_xlabel("layer behind the frontier")
    ax.set_ylabel("infection proportion")
    ax.legend(fontsize=9)
    _finish(fig, path)


def radial_profile_figure(rows, iota, path) -> None:
    """Ultimate-proportion decay toward the flat level; rows are
    (direction, distance, value)."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    dirs = sorted({r[0] for r in rows})
    for d in dirs:
        pts = [(r[1], r[2]) for r in rows if r[0] == d]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=d, lw=1.3)
    ax.axhline(iota, color="gray", ls=":", lw=1.0, label="survival probability")
    ax.set_xlabel("l1 distance from the seed")
    ax.set_ylabel("ultimate proportion")
    ax.legend(fontsize=9)
    _finish(fig, path)


def growth_gap_figure(rows, path) -> None:
    """Exact vs. asymptotic per-step growth of the weighted path count."""
    ns = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(ns, [r[1] for r in rows], "o-", label="exact count", lw=1.2)
    ax.plot(ns, [r[2] for r in rows], ls="--", label="rate functional", lw=1.2)
    ax.set_xlabel("path length n")
    ax.set_ylabel("per-step log growth")
    ax.legend(fontsize=9)
    _finish(fig, path)
