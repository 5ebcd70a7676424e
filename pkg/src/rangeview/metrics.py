"""Distribution and reconstruction metrics for generated scans."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist

from .geometry import PointCloud
from .projection import RangeImage

DEFAULT_BOUNDS = (-50.0, 50.0, -50.0, 50.0)
DEFAULT_BINS = 100


@dataclass
class BEVHistogram:
    """Top-down point counts; ``bins[i, j]`` covers the i-th x and j-th y cell."""

    bins: np.ndarray
    bounds: tuple[float, float, float, float]

    @property
    def total(self) -> float:
        return float(self.bins.sum())

    def normalized(self) -> np.ndarray:
        s = self.bins.sum()
        return self.bins / s if s > 0 else self.bins.astype(np.float64)


def bev_histogram(cloud: PointCloud, bounds=DEFAULT_BOUNDS, bins: int = DEFAULT_BINS) -> BEVHistogram:
    """Count points per (x, y) cell; out-of-bounds points are dropped.

    Cells are half-open except the last one along each axis, which also
    takes points on the upper bound.
    """
    x_min, x_max, y_min, y_max = (float(b) for b in bounds)
    if not (x_min < x_max and y_min < y_max):
        raise ValueError(f"degenerate bounds {bounds}")
    counts, _, _ = np.histogram2d(cloud.xyz[:, 0], cloud.xyz[:, 1], bins=bins,
                                  range=[[x_min, x_max], [y_min, y_max]])
    return BEVHistogram(counts, (x_min, x_max, y_min, y_max))


def _aggregate(hists, name) -> np.ndarray:
    hists = list(hists)
    if not hists:
        raise ValueError(f"{name} is empty")
    total = np.sum([h.bins for h in hists], axis=0).astype(np.float64)
    s = total.sum()
    if s <= 0:
        raise ValueError(f"{name} contains no points inside the grid")
    return total / s


def _check_grids(set_a, set_b):
    shapes = {h.bins.shape for h in list(set_a) + list(set_b)}
    if len(shapes) > 1:
        raise ValueError(f"histograms have different grids: {sorted(shapes)}")


def jsd(set_a, set_b) -> float:
    """Jensen-Shannon divergence (nats) between the two sets' pooled histograms."""
    _check_grids(set_a, set_b)
    p = _aggregate(set_a, "set_a")
    q = _aggregate(set_b, "set_b")
    m = 0.5 * (p + q)

    def kl(a):
        nz = a > 0
        return float(np.sum(a[nz] * np.log(a[nz] / m[nz])))

    return 0.5 * kl(p) + 0.5 * kl(q)


def _flat_normalized(hists, name) -> np.ndarray:
    hists = list(hists)
    if not hists:
        raise ValueError(f"{name} is empty")
    return np.stack([h.normalized().reshape(-1) for h in hists])


def median_bandwidth(x: np.ndarray, y: np.ndarray) -> float:
    """Median pairwise distance over the pooled samples (1.0 if all coincide)."""
    pooled = np.concatenate([x, y])
    if len(pooled) < 2:
        return 1.0
    med = float(np.median(pdist(pooled)))
    return med if med > 0 else 1.0


def mmd(set_a, set_b, bandwidth: float | None = None) -> float:
    """Biased squared MMD with a Gaussian kernel on normalized histograms."""
    _check_grids(set_a, set_b)
    x = _flat_normalized(set_a, "set_a")
    y = _flat_normalized(set_b, "set_b")
    g = median_bandwidth(x, y) if bandwidth is None else float(bandwidth)
    if not g > 0:
        raise ValueError("bandwidth must be positive")

    def k(a, b):
        return np.exp(-cdist(a, b, "sqeuclidean") / (2.0 * g * g))

    return float(k(x, x).mean() + k(y, y).mean() - 2.0 * k(x, y).mean())


def chamfer(p: PointCloud, q: PointCloud) -> float:
    """Mean squared nearest-neighbour distance, summed over both directions."""
    if len(p) == 0 or len(q) == 0:
        raise ValueError("chamfer distance needs two non-empty clouds")
    d_pq, _ = cKDTree(q.xyz).query(p.xyz)
    d_qp, _ = cKDTree(p.xyz).query(q.xyz)
    return float(np.mean(d_pq ** 2) + np.mean(d_qp ** 2))


def range_mae(a: RangeImage, b: RangeImage, valid_policy: str = "all") -> float:
    """Mean absolute range error; ``both_valid`` skips pixels empty in either image."""
    if a.range.shape != b.range.shape:
        raise ValueError(f"image sizes differ: {a.range.shape} vs {b.range.shape}")
    if valid_policy == "all":
        sel = np.ones(a.range.shape, dtype=bool)
    elif valid_policy == "both_valid":
        sel = a.valid & b.valid
    else:
        raise ValueError(f"unknown valid_policy {valid_policy!r}")
    if not sel.any():
        raise ValueError("no pixels selected for comparison")
    return float(np.mean(np.abs(a.range[sel] - b.range[sel])))


@dataclass
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray
    n: int


def gaussian_stats(features) -> GaussianStats:
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or len(f) < 2:
        raise ValueError("need an (n, D) feature matrix with n >= 2")
    mean = f.mean(axis=0)
    centered = f - mean
    cov = centered.T @ centered / (len(f) - 1)
    return GaussianStats(mean, 0.5 * (cov + cov.T), len(f))


@dataclass
class FrechetResult:
    distance: float
    jitter: float = 0.0  # diagonal load added after a failed decomposition

    def __float__(self) -> float:
        return self.distance


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _trace_sqrt_product(s1: np.ndarray, s2: np.ndarray) -> float:
    r1 = _psd_sqrt(s1)
    inner = r1 @ s2 @ r1
    w = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    if not np.all(np.isfinite(w)):
        raise np.linalg.LinAlgError("non-finite eigenvalues")
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def frechet_distance(g1: GaussianStats, g2: GaussianStats) -> FrechetResult:
    mu1, mu2 = np.atleast_1d(g1.mean), np.atleast_1d(g2.mean)
    s1, s2 = np.atleast_2d(g1.cov), np.atleast_2d(g2.cov)
    if mu1.shape != mu2.shape or s1.shape != s2.shape:
        raise ValueError("statistics have different dimensions")
    for arr in (mu1, mu2, s1, s2):
        if not np.all(np.isfinite(arr)):
            raise ValueError("statistics must be finite")
    jitter = 0.0
    try:
        tr_sqrt = _trace_sqrt_product(s1, s2)
    except np.linalg.LinAlgError:
        jitter = 1e-10
        eye = np.eye(len(s1)) * jitter
        tr_sqrt = _trace_sqrt_product(s1 + eye, s2 + eye)
    diff = mu1 - mu2
    d = float(diff @ diff + np.trace(s1) + np.trace(s2) - 2.0 * tr_sqrt)
    # rounding can push identical statistics a hair below zero
    return FrechetResult(max(d, 0.0), jitter)
