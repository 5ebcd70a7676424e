"""Rasterising point clouds into range images and back."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import assign_beam
from .geometry import (BeamModel, PointCloud, SphericalCoord, beam_spherical_to_cart,
                       cart_to_beam_spherical)


@dataclass
class RangeImage:
    """Per-pixel range (m) and intensity, rows are beams, columns azimuth.

    A range of 0 marks a pixel without a return; its intensity is 0 as well.
    """

    range: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        self.range = np.asarray(self.range, dtype=np.float64)
        self.intensity = np.asarray(self.intensity, dtype=np.float64)
        if self.range.ndim != 2 or self.range.shape != self.intensity.shape:
            raise ValueError("range and intensity must be equally shaped 2-D arrays")
        if np.any(self.range < 0) or not np.all(np.isfinite(self.range)):
            raise ValueError("ranges must be finite and non-negative")

    @classmethod
    def zeros(cls, height: int, width: int) -> "RangeImage":
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    @property
    def height(self) -> int:
        return self.range.shape[0]

    @property
    def width(self) -> int:
        return self.range.shape[1]

    @property
    def valid(self) -> np.ndarray:
        return self.range > 0

    def stack(self) -> np.ndarray:
        """(H, W, 2) array of (range, intensity)."""
        return np.stack([self.range, self.intensity], axis=-1)

    @classmethod
    def from_stack(cls, arr) -> "RangeImage":
        arr = np.asarray(arr)
        return cls(arr[..., 0], arr[..., 1])

    def roll(self, k: int) -> "RangeImage":
        return RangeImage(np.roll(self.range, k, axis=1), np.roll(self.intensity, k, axis=1))


def azimuth_to_column(theta, width: int) -> np.ndarray:
    u = np.floor((np.asarray(theta) + np.pi) / (2 * np.pi) * width).astype(np.int64)
    return np.mod(u, width)


def column_azimuth(width: int) -> np.ndarray:
    """Azimuth of each column's pixel center."""
    return (np.arange(width) + 0.5) / width * 2 * np.pi - np.pi


def project(cloud: PointCloud, model: BeamModel, width: int = 1024) -> RangeImage:
    """Range image with one row per laser of ``model``.

    Points are assigned to the laser whose cone they lie closest to and
    measured from that laser's origin.  When several points land in one
    pixel the nearest one wins.
    """
    if width < 1:
        raise ValueError("width must be positive")
    img = RangeImage.zeros(len(model), width)
    if len(cloud) == 0:
        return img
    rows = assign_beam(cloud.xyz, model)
    sph = cart_to_beam_spherical(cloud.xyz, rows, model)
    cols = azimuth_to_column(sph.theta, width)
    pix = rows * width + cols
    order = np.lexsort((sph.r, pix))
    pix_sorted = pix[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = pix_sorted[1:] != pix_sorted[:-1]
    win = order[first]
    img.range.flat[pix[win]] = sph.r[win]
    img.intensity.flat[pix[win]] = cloud.intensity[win]
    # a zero-range return is indistinguishable from an empty pixel
    img.intensity[img.range == 0] = 0.0
    return img


def unproject(img: RangeImage, model: BeamModel) -> PointCloud:
    """Points at each valid pixel's center azimuth, row-major order."""
    if img.height != len(model):
        raise ValueError(f"image has {img.height} rows but the model has {len(model)} beams")
    rows, cols = np.nonzero(img.valid)
    theta = column_azimuth(img.width)[cols]
    xyz = beam_spherical_to_cart(
        SphericalCoord(img.range[rows, cols], theta, model.pitches[rows]),
        model.heights[rows])
    return PointCloud(xyz.reshape(-1, 3), np.clip(img.intensity[rows, cols], 0.0, 1.0))


@dataclass(frozen=True)
class Normalizer:
    """Maps ranges to [-1, 1]; ``scheme`` is ``"log"`` or ``"linear"``."""

    scheme: str = "log"
    max_range: float = 80.0

    def __post_init__(self):
        if self.scheme not in ("log", "linear"):
            raise ValueError(f"unknown normalizer scheme {self.scheme!r}")
        if not self.max_range > 0:
            raise ValueError("max_range must be positive")

    def forward(self, r):
        r = np.clip(np.asarray(r, dtype=np.float64), 0.0, self.max_range)
        if self.scheme == "log":
            return 2.0 * np.log2(r + 1.0) / np.log2(self.max_range + 1.0) - 1.0
        return 2.0 * r / self.max_range - 1.0

    def inverse(self, v):
        v = np.asarray(v, dtype=np.float64)
        if self.scheme == "log":
            return np.exp2((v + 1.0) / 2.0 * np.log2(self.max_range + 1.0)) - 1.0
        return (v + 1.0) / 2.0 * self.max_range


def normalize(img: RangeImage, nz: Normalizer) -> np.ndarray:
    """(H, W, 2) tensor in [-1, 1]; ranges above ``max_range`` are clamped."""
    return np.stack([nz.forward(img.range),
                     2.0 * np.clip(img.intensity, 0.0, 1.0) - 1.0], axis=-1)


def denormalize(tensor, nz: Normalizer) -> RangeImage:
    tensor = np.asarray(tensor, dtype=np.float64)
    r = np.maximum(nz.inverse(tensor[..., 0]), 0.0)
    i = np.clip((tensor[..., 1] + 1.0) / 2.0, 0.0, 1.0)
    i[r == 0] = 0.0
    return RangeImage(r, i)
