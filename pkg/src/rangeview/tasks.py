"""Inputs for conditional generation: sparse beams, sector masks, conditions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projection import RangeImage, column_azimuth


@dataclass
class SectorMask:
    """Binary (H, W) mask, 1 where data was removed and must be inpainted."""

    mask: np.ndarray
    center_deg: float
    width_deg: float


def subsample_beams(img: RangeImage, factor: int) -> RangeImage:
    """Keep every ``factor``-th row starting with row 0."""
    if factor < 1 or img.height % factor:
        raise ValueError(f"factor {factor} does not divide image height {img.height}")
    return RangeImage(img.range[::factor].copy(), img.intensity[::factor].copy())


def sector_columns(width: int, center_deg: float, width_deg: float) -> np.ndarray:
    """Boolean column mask of pixel centers within +-width/2 of ``center_deg``."""
    if not 0 < width_deg <= 360:
        raise ValueError("width_deg must lie in (0, 360]")
    diff = column_azimuth(width) - np.deg2rad(center_deg)
    diff = np.angle(np.exp(1j * diff))  # wrap to (-pi, pi]
    return np.abs(diff) <= np.deg2rad(width_deg) / 2.0


def mask_sector(img: RangeImage, center_deg: float = 0.0,
                width_deg: float = 22.5) -> tuple[RangeImage, SectorMask]:
    """Blank an azimuth sector (default: 22.5 degrees straight ahead)."""
    cols = sector_columns(img.width, center_deg, width_deg)
    mask = np.broadcast_to(cols, img.range.shape).astype(np.uint8)
    keep = mask == 0
    out = RangeImage(np.where(keep, img.range, 0.0), np.where(keep, img.intensity, 0.0))
    return out, SectorMask(mask, float(center_deg), float(width_deg))


def direction_condition(h: int, w: int) -> np.ndarray:
    """(h, w) matrix whose first column is 1; marks the +x heading."""
    if h < 1 or w < 1:
        raise ValueError("condition dimensions must be positive")
    cond = np.zeros((h, w), dtype=np.uint8)
    cond[:, 0] = 1
    return cond


def reshape_condition(sparse, f: int) -> np.ndarray:
    """Fold groups of ``f`` adjacent columns into channels.

    ``out[r, c, ch * f + k] == sparse[r, c * f + k, ch]``; the inverse is
    :func:`unreshape_condition`.
    """
    sparse = np.asarray(sparse)
    h, width, ch = sparse.shape
    if f < 1 or width % f:
        raise ValueError(f"factor {f} does not divide width {width}")
    return sparse.reshape(h, width // f, f, ch).transpose(0, 1, 3, 2).reshape(h, width // f, ch * f)


def unreshape_condition(folded, f: int, channels: int = 2) -> np.ndarray:
    folded = np.asarray(folded)
    h, w, cf = folded.shape
    if cf != channels * f:
        raise ValueError(f"expected {channels * f} channels, got {cf}")
    return folded.reshape(h, w, channels, f).transpose(0, 1, 3, 2).reshape(h, w * f, channels)


def downsample_mask(mask, f: int) -> np.ndarray:
    """Max-pool by ``f``: a cell is masked if any pixel it covers is masked."""
    mask = np.asarray(mask)
    h, w = mask.shape
    if f < 1 or h % f or w % f:
        raise ValueError(f"factor {f} does not divide mask shape {mask.shape}")
    return mask.reshape(h // f, f, w // f, f).max(axis=(1, 3)).astype(np.uint8)
