"""Hough-voting estimation of per-beam mounting height and pitch.

Every return at planar distance ``d`` and height ``z`` lies on the cone of
exactly one laser, so for that laser ``phi_j = atan2(z - h_j, d)``.  Read the
other way round, a point constrains (h, phi) to a curve; each point votes
along its curve once per height bin, and the lasers show up as the places
where thousands of curves cross.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import BeamModel, PointCloud


@dataclass(frozen=True)
class HoughConfig:
    h_min: float = -0.5
    h_max: float = 0.5
    h_bins: int = 401
    phi_min: float = float(np.deg2rad(-30.0))
    phi_max: float = float(np.deg2rad(10.0))
    phi_bins: int = 2000
    num_beams: int = 64
    suppression_radius: int = 3
    d_min: float = 2.0

    def __post_init__(self):
        if not self.h_min < self.h_max:
            raise ValueError("h_min must be below h_max")
        if not self.phi_min < self.phi_max:
            raise ValueError("phi_min must be below phi_max")
        if self.h_bins < 2 or self.phi_bins < 2:
            raise ValueError("need at least two bins per axis")
        if self.num_beams < 1:
            raise ValueError("num_beams must be positive")
        if self.suppression_radius < 0:
            raise ValueError("suppression_radius must be non-negative")

    @property
    def h_centers(self) -> np.ndarray:
        """Height bin centers; both ends of [h_min, h_max] are centers."""
        return np.linspace(self.h_min, self.h_max, self.h_bins)

    @property
    def phi_step(self) -> float:
        return (self.phi_max - self.phi_min) / self.phi_bins

    @property
    def phi_centers(self) -> np.ndarray:
        return self.phi_min + (np.arange(self.phi_bins) + 0.5) * self.phi_step


@dataclass
class HoughAccumulator:
    grid: np.ndarray  # (h_bins, phi_bins) int64 vote counts
    config: HoughConfig

    @classmethod
    def zeros(cls, config: HoughConfig) -> "HoughAccumulator":
        return cls(np.zeros((config.h_bins, config.phi_bins), dtype=np.int64), config)

    def merge(self, other: "HoughAccumulator") -> "HoughAccumulator":
        if other.config != self.config:
            raise ValueError("cannot merge accumulators with different grids")
        return HoughAccumulator(self.grid + other.grid, self.config)

    __add__ = merge

    @property
    def total(self) -> int:
        return int(self.grid.sum())


def _vote_chunk(d: np.ndarray, z: np.ndarray, config: HoughConfig) -> np.ndarray:
    h = config.h_centers
    phi = np.arctan2(z[:, None] - h[None, :], d[:, None])
    k = np.floor((phi - config.phi_min) / config.phi_step)
    ok = (phi >= config.phi_min) & (phi < config.phi_max) & (k < config.phi_bins)
    flat = (np.broadcast_to(np.arange(config.h_bins), k.shape)[ok] * config.phi_bins
            + k[ok].astype(np.int64))
    return np.bincount(flat, minlength=config.h_bins * config.phi_bins).reshape(
        config.h_bins, config.phi_bins)


def accumulate_votes(cloud: PointCloud, config: HoughConfig, *, chunk: int = 4096,
                     workers: int = 1) -> HoughAccumulator:
    """Cast one vote per (point, height bin) along each point's curve.

    Points closer than ``config.d_min`` in the xy plane do not vote.  With
    ``workers > 1`` chunks are voted into private grids and summed.
    """
    if len(cloud) == 0:
        raise ValueError("cannot accumulate votes from an empty cloud")
    x, y, z = cloud.xyz.T
    d = np.hypot(x, y)
    keep = d > config.d_min
    d, z = d[keep], z[keep]
    spans = [slice(i, i + chunk) for i in range(0, len(d), chunk)]
    acc = HoughAccumulator.zeros(config)
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = pool.map(lambda s: _vote_chunk(d[s], z[s], config), spans)
            for part in parts:
                acc.grid += part
    else:
        for s in spans:
            acc.grid += _vote_chunk(d[s], z[s], config)
    return acc


def extract_beams(acc: HoughAccumulator, n: int) -> BeamModel:
    """Pick ``n`` peaks by repeated argmax with square non-maximum suppression.

    Each peak is refined to the vote-weighted centroid of its suppression
    window; the result is ordered top beam first.
    """
    if n < 1:
        raise ValueError("n must be positive")
    cfg = acc.config
    work = acc.grid.astype(np.float64).copy()
    if not work.any():
        raise ValueError("accumulator holds no votes")
    rad = cfg.suppression_radius
    h_c, phi_c = cfg.h_centers, cfg.phi_centers
    beams = []
    for found in range(n):
        # argmax returns the first maximum in row-major order: ties go to the
        # lower (h, phi) cell
        flat = int(np.argmax(work))
        i, k = divmod(flat, cfg.phi_bins)
        if work[i, k] <= 0:
            raise ValueError(f"only {found} peaks found, {n} requested")
        hs = slice(max(i - rad, 0), i + rad + 1)
        ps = slice(max(k - rad, 0), k + rad + 1)
        win = work[hs, ps]
        w = win.sum()
        h = float((win.sum(axis=1) * h_c[hs]).sum() / w)
        phi = float((win.sum(axis=0) * phi_c[ps]).sum() / w)
        beams.append((h, phi))
        work[hs, ps] = 0.0
    beams.sort(key=lambda b: -b[1])
    pitches = np.array([b[1] for b in beams])
    if np.any(np.diff(pitches) >= 0):
        raise ValueError("two extracted beams share a pitch; "
                         "increase the phi resolution or suppression radius")
    return BeamModel.from_pairs(beams)


def beam_elevations(xyz: np.ndarray, model: BeamModel) -> np.ndarray:
    """(N, n_beams) elevation of each point seen from each laser's origin."""
    xyz = np.atleast_2d(np.asarray(xyz, dtype=np.float64))
    d = np.hypot(xyz[:, 0], xyz[:, 1])
    return np.arctan2(xyz[:, 2:3] - model.heights[None, :], d[:, None])


def assign_beam(p, model: BeamModel):
    """Index of the laser whose cone passes closest (in elevation) to ``p``.

    Accepts one point or an (N, 3) array; ties resolve to the smaller index.
    """
    p = np.asarray(p, dtype=np.float64)
    single = p.ndim == 1
    xyz = np.atleast_2d(p)
    if len(xyz) == 0:
        return np.zeros(0, dtype=np.int64)
    d = np.hypot(xyz[:, 0], xyz[:, 1])
    if np.any(d == 0):
        bad = int(np.flatnonzero(d == 0)[0])
        raise ValueError(f"point {bad} lies on the sensor axis; elevation undefined")
    out = np.empty(len(xyz), dtype=np.int64)
    step = max(1, (1 << 20) // len(model))
    for s in range(0, len(xyz), step):
        err = np.abs(beam_elevations(xyz[s:s + step], model) - model.pitches[None, :])
        out[s:s + step] = np.argmin(err, axis=1)
    return int(out[0]) if single else out


def calibrate(clouds, config: HoughConfig, *, workers: int = 1) -> BeamModel:
    """Accumulate votes over every cloud, then extract ``config.num_beams`` beams."""
    clouds = list(clouds)
    if not clouds:
        raise ValueError("calibrate needs at least one cloud")
    acc = HoughAccumulator.zeros(config)
    for cloud in clouds:
        acc = acc.merge(accumulate_votes(cloud, config, workers=workers))
    return extract_beams(acc, config.num_beams)
