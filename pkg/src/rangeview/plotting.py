"""Figures written next to the CLI's text output.

Uses the object-oriented matplotlib API only, so importing this module never
touches the global pyplot state or requires a display.
"""
from __future__ import annotations

import numpy as np
from matplotlib.figure import Figure

from .calibration import HoughAccumulator
from .geometry import BeamModel, PointCloud
from .metrics import BEVHistogram
from .projection import RangeImage, project


def _range_panel(ax, img: RangeImage, title: str):
    shown = np.where(img.valid, img.range, np.nan)
    im = ax.imshow(shown, aspect="auto", cmap="turbo", interpolation="nearest")
    ax.set_title(title, fontsize=9)
    ax.set_ylabel("beam")
    return im


def plot_range_image(img: RangeImage, path, title: str = "range (m)") -> None:
    fig = Figure(figsize=(12, 3.2))
    ax_r, ax_i = fig.subplots(2, 1, sharex=True)
    fig.colorbar(_range_panel(ax_r, img, title), ax=ax_r, pad=0.01)
    im = ax_i.imshow(np.where(img.valid, img.intensity, np.nan), aspect="auto",
                     cmap="gray", vmin=0, vmax=1, interpolation="nearest")
    ax_i.set_title("intensity", fontsize=9)
    ax_i.set_xlabel("column")
    fig.colorbar(im, ax=ax_i, pad=0.01)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def plot_projection_comparison(cloud: PointCloud, model: BeamModel, width: int, path) -> None:
    """Shared-origin projection above per-laser projection of the same cloud."""
    fig = Figure(figsize=(12, 3.6))
    ax_a, ax_b = fig.subplots(2, 1, sharex=True)
    _range_panel(ax_a, project(cloud, model.shared_origin(), width), "shared origin")
    im = _range_panel(ax_b, project(cloud, model, width), "calibrated beam origins")
    ax_b.set_xlabel("column")
    fig.colorbar(im, ax=[ax_a, ax_b], pad=0.01, label="range (m)")
    fig.savefig(path, dpi=120)


def plot_hough_accumulator(acc: HoughAccumulator, path, model: BeamModel | None = None) -> None:
    cfg = acc.config
    fig = Figure(figsize=(7, 5))
    ax = fig.subplots()
    extent = (np.rad2deg(cfg.phi_min), np.rad2deg(cfg.phi_max), cfg.h_min, cfg.h_max)
    im = ax.imshow(np.log1p(acc.grid), origin="lower", aspect="auto", extent=extent,
                   cmap="magma", interpolation="nearest")
    if model is not None:
        ax.plot(np.rad2deg(model.pitches), model.heights, "c+", ms=6, label="extracted beams")
        ax.legend(loc="upper left", fontsize=8)
    ax.set_xlabel("pitch (deg)")
    ax.set_ylabel("height (m)")
    fig.colorbar(im, ax=ax, label="log(1 + votes)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def plot_bev_pair(a: BEVHistogram, b: BEVHistogram, path, labels=("set A", "set B")) -> None:
    fig = Figure(figsize=(9, 4.2))
    axes = fig.subplots(1, 2)
    x0, x1, y0, y1 = a.bounds
    for ax, h, label in zip(axes, (a, b), labels):
        im = ax.imshow(np.log1p(h.normalized().T * 1e4), origin="lower", extent=(x0, x1, y0, y1),
                       cmap="viridis")
        ax.set_title(label, fontsize=9)
        ax.set_xlabel("x (m)")
    axes[0].set_ylabel("y (m)")
    fig.colorbar(im, ax=list(axes), label="log(1 + 1e4 p)")
    fig.savefig(path, dpi=120)
