"""Beam-consistent synthetic scans with known ground truth."""
from __future__ import annotations

import numpy as np

from .geometry import BeamModel, PointCloud, SphericalCoord, beam_spherical_to_cart


def kitti_like_model(n_beams: int = 64, rng=None, *, h_range=(-0.3, 0.3),
                     pitch_range_deg=(3.0, -25.0), pitch_jitter_deg: float = 0.05) -> BeamModel:
    """Random beam model with roughly evenly spaced pitches, top beam first."""
    rng = np.random.default_rng(rng)
    pitches = np.deg2rad(np.linspace(*pitch_range_deg, n_beams))
    if n_beams > 1:
        spacing = abs(pitches[1] - pitches[0])
        jitter = min(np.deg2rad(pitch_jitter_deg), 0.25 * spacing)
        pitches = pitches + rng.uniform(-jitter, jitter, n_beams)
        pitches[0] = np.deg2rad(pitch_range_deg[0])
        pitches[-1] = np.deg2rad(pitch_range_deg[1])
    heights = rng.uniform(*h_range, n_beams)
    return BeamModel(heights, pitches)


def beam_scan(model: BeamModel, points_per_beam: int, rng=None, *, r_min: float = 5.0,
              r_max: float = 60.0, range_noise: float = 0.0, pitch_noise: float = 0.0,
              width: int | None = None) -> tuple[PointCloud, np.ndarray]:
    """Sample returns on each laser's cone; returns the cloud and beam labels.

    ``range_noise`` (m) and ``pitch_noise`` (rad) are Gaussian standard
    deviations applied per point.  With ``width`` given, azimuths are distinct pixel centers of a
    ``width``-column image, so every pixel receives at most one point.
    """
    rng = np.random.default_rng(rng)
    n = len(model)
    labels = np.repeat(np.arange(n), points_per_beam)
    if width is None:
        theta = rng.uniform(-np.pi, np.pi, n * points_per_beam)
    else:
        if points_per_beam > width:
            raise ValueError("more points per beam than columns")
        cols = np.concatenate([rng.choice(width, points_per_beam, replace=False)
                               for _ in range(n)])
        theta = (cols + 0.5) / width * 2 * np.pi - np.pi
    r = rng.uniform(r_min, r_max, n * points_per_beam)
    if range_noise > 0:
        r = np.abs(r + rng.normal(0.0, range_noise, r.shape))
    phi = model.pitches[labels]
    if pitch_noise > 0:
        phi = phi + rng.normal(0.0, pitch_noise, phi.shape)
    xyz = beam_spherical_to_cart(SphericalCoord(r, theta, phi),
                                 model.heights[labels])
    intensity = rng.uniform(0.0, 1.0, len(r))
    return PointCloud(xyz, intensity), labels
