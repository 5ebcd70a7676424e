"""Point clouds, beam models and spherical coordinate conversions.

All conversions are vectorised: a "point" is any array whose last axis has
length 3, so a single point and an (N, 3) cloud go through the same code.
Azimuth follows ``numpy.arctan2`` and lies in (-pi, pi]; at the pole
(x = y = 0) it is 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class SphericalCoord(NamedTuple):
    """Range (m), azimuth ``theta`` (rad) and elevation ``phi`` (rad).

    Fields may be scalars or equally shaped arrays.
    """

    r: np.ndarray | float
    theta: np.ndarray | float
    phi: np.ndarray | float


@dataclass
class PointCloud:
    """Sensor-frame points with per-point reflectance.

    ``xyz`` is (N, 3) in meters, ``intensity`` is (N,) in [0, 1].
    """

    xyz: np.ndarray
    intensity: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=np.float64)
        if xyz.size == 0:
            xyz = xyz.reshape(0, 3)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise ValueError(f"xyz must have shape (N, 3), got {xyz.shape}")
        if self.intensity is None:
            intensity = np.zeros(len(xyz))
        else:
            intensity = np.asarray(self.intensity, dtype=np.float64).reshape(-1)
        if len(intensity) != len(xyz):
            raise ValueError(
                f"intensity has {len(intensity)} entries for {len(xyz)} points")
        if not np.all(np.isfinite(xyz)):
            bad = int(np.flatnonzero(~np.isfinite(xyz).all(axis=1))[0])
            raise ValueError(f"non-finite coordinate at point {bad}")
        if np.any((intensity < 0) | (intensity > 1)) or not np.all(np.isfinite(intensity)):
            raise ValueError("intensity must lie in [0, 1]")
        self.xyz = xyz
        self.intensity = intensity

    def __len__(self) -> int:
        return len(self.xyz)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.zeros((0, 3)))

    def rotate_z(self, angle: float) -> "PointCloud":
        """Rotate about the vertical axis by ``angle`` radians (counter-clockwise)."""
        c, s = np.cos(angle), np.sin(angle)
        x, y, z = self.xyz.T
        xyz = np.stack([c * x - s * y, s * x + c * y, z], axis=1)
        return PointCloud(xyz, self.intensity.copy())

    def concat(self, other: "PointCloud") -> "PointCloud":
        return PointCloud(np.concatenate([self.xyz, other.xyz]),
                          np.concatenate([self.intensity, other.intensity]))


@dataclass(frozen=True)
class BeamModel:
    """Per-laser mounting height and pitch, top beam (largest pitch) first."""

    heights: np.ndarray
    pitches: np.ndarray

    def __post_init__(self):
        h = np.array(self.heights, dtype=np.float64).reshape(-1)
        p = np.array(self.pitches, dtype=np.float64).reshape(-1)
        if len(h) == 0:
            raise ValueError("a beam model needs at least one beam")
        if len(h) != len(p):
            raise ValueError(f"{len(h)} heights but {len(p)} pitches")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(p))):
            raise ValueError("beam parameters must be finite")
        if np.any(np.diff(p) >= 0):
            raise ValueError("beam pitches must be strictly decreasing")
        h.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "pitches", p)

    def __len__(self) -> int:
        return len(self.heights)

    @classmethod
    def from_pairs(cls, pairs) -> "BeamModel":
        arr = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    def subset(self, rows) -> "BeamModel":
        rows = np.asarray(rows)
        return BeamModel(self.heights[rows], self.pitches[rows])

    def shared_origin(self) -> "BeamModel":
        """Same pitches with every laser moved to the sensor origin."""
        return BeamModel(np.zeros(len(self)), self.pitches)


def cart_to_spherical(p) -> SphericalCoord:
    p = np.asarray(p, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    d = np.hypot(x, y)
    return SphericalCoord(np.sqrt(x * x + y * y + z * z),
                          np.arctan2(y, x), np.arctan2(z, d))


def cart_to_beam_spherical(p, j, model: BeamModel) -> SphericalCoord:
    """Range and azimuth measured from beam ``j``'s optical center.

    The elevation is the beam's nominal pitch, not one derived from ``z``.
    ``j`` may be an integer or an index array broadcasting against ``p[..., 0]``.
    """
    j = np.asarray(j)
    n = len(model)
    if np.any((j < 0) | (j >= n)):
        raise IndexError(f"beam index out of range for a {n}-beam model")
    p = np.asarray(p, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    dz = z - model.heights[j]
    r = np.sqrt(x * x + y * y + dz * dz)
    theta = np.arctan2(y, x)
    phi = np.broadcast_to(model.pitches[j], np.shape(r))
    if np.ndim(r) == 0:
        return SphericalCoord(float(r), float(theta), float(phi))
    return SphericalCoord(r, theta, np.array(phi))


def beam_spherical_to_cart(s: SphericalCoord, h) -> np.ndarray:
    """Inverse of :func:`cart_to_beam_spherical` for a laser at height ``h``."""
    r, theta, phi = (np.asarray(v, dtype=np.float64) for v in s)
    if np.any(r < 0):
        raise ValueError("range must be non-negative")
    cp = np.cos(phi)
    return np.stack([r * cp * np.cos(theta), r * cp * np.sin(theta),
                     r * np.sin(phi) + h], axis=-1)
