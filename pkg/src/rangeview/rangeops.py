"""Operators on (H, W, C) range-image feature maps.

Columns are azimuth, so the left and right image borders are neighbours:
every horizontal lookup here wraps around.  Rows (beams) do not wrap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .geometry import SphericalCoord


def circular_pad(fm, k: int, vertical: int = 0) -> np.ndarray:
    """Wrap ``k`` columns onto each side; zero-pad ``vertical`` rows top and bottom."""
    fm = np.asarray(fm)
    if k < 0 or vertical < 0:
        raise ValueError("padding must be non-negative")
    extra = [(0, 0)] * (fm.ndim - 2)
    out = np.pad(fm, [(0, 0), (k, k)] + extra, mode="wrap")
    if vertical:
        out = np.pad(out, [(vertical, vertical), (0, 0)] + extra)
    return out


def circular_conv2d(fm, kernel, vertical_zero_pad: bool = True, bias=None) -> np.ndarray:
    """Cross-correlate an (H, W, C_in) map with a (C_out, C_in, kh, kw) kernel.

    Output width always equals input width.  Without vertical padding the
    output loses ``kh - 1`` rows.
    """
    fm = np.asarray(fm, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if fm.ndim == 2:
        fm = fm[..., None]
    c_out, c_in, kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("kernel height and width must be odd")
    if fm.shape[2] != c_in:
        raise ValueError(f"kernel expects {c_in} channels, feature map has {fm.shape[2]}")
    padded = circular_pad(fm, kw // 2, kh // 2 if vertical_zero_pad else 0)
    win = sliding_window_view(padded, (kh, kw), axis=(0, 1))  # H, W, C, kh, kw
    out = np.einsum("hwcij,ocij->hwo", win, kernel, optimize=True)
    if bias is not None:
        out = out + np.asarray(bias)
    return out


def relative_spherical_offset(pj: SphericalCoord, pi: SphericalCoord, exact: bool = True):
    """Displacement of ``pj`` in the frame where ``pi`` lies on the local x axis.

    Both points are given as (range, azimuth, elevation) about a common
    origin.  The frame is reached by undoing ``pi``'s azimuth and then its
    elevation, so the norm of the result is the Euclidean distance between
    the two points.  ``exact=False`` returns the separable form
    ``(rj cos de cos da - ri, rj cos de sin da, rj sin de)``, which agrees
    with the exact frame when ``pi`` has zero elevation.
    """
    rj, aj, ej = (np.asarray(v, dtype=np.float64) for v in pj)
    ri, ai, ei = (np.asarray(v, dtype=np.float64) for v in pi)
    da = aj - ai
    if not exact:
        de = ej - ei
        return np.stack([rj * np.cos(de) * np.cos(da) - ri,
                         rj * np.cos(de) * np.sin(da),
                         rj * np.sin(de)], axis=-1)
    x = rj * np.cos(ej) * np.cos(da)
    y = rj * np.cos(ej) * np.sin(da)
    z = rj * np.sin(ej)
    ce, se = np.cos(ei), np.sin(ei)
    return np.stack([ce * x + se * z - ri, y, -se * x + ce * z], axis=-1)


@dataclass
class MetaKernelWeights:
    """Dense layers ``y = x @ w + b`` of the offset MLP and the output layer.

    ``phi_w1``: (3, C_mid), ``phi_w2``: (C_mid, C_in), ``w``: (K * C_in, C_out).
    """

    phi_w1: np.ndarray
    phi_b1: np.ndarray
    phi_w2: np.ndarray
    phi_b2: np.ndarray
    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for name in ("phi_w1", "phi_b1", "phi_w2", "phi_b2", "w", "b"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        c_mid = self.phi_w1.shape[1]
        if self.phi_w1.shape != (3, c_mid) or self.phi_b1.shape != (c_mid,):
            raise ValueError("first offset layer must map 3 -> C_mid")
        if self.phi_w2.shape[0] != c_mid or self.phi_b2.shape != (self.phi_w2.shape[1],):
            raise ValueError("second offset layer must map C_mid -> C_in")
        if self.w.ndim != 2 or self.w.shape[0] % self.c_in:
            raise ValueError("output layer input size must be a multiple of C_in")
        if self.b.shape != (self.w.shape[1],):
            raise ValueError("output bias must have C_out entries")

    @property
    def c_mid(self) -> int:
        return self.phi_w1.shape[1]

    @property
    def c_in(self) -> int:
        return self.phi_w2.shape[1]

    @property
    def c_out(self) -> int:
        return self.w.shape[1]

    @property
    def k(self) -> int:
        return self.w.shape[0] // self.c_in

    def offset_mlp(self, gamma: np.ndarray) -> np.ndarray:
        hidden = np.maximum(gamma @ self.phi_w1 + self.phi_b1, 0.0)
        return hidden @ self.phi_w2 + self.phi_b2


def meta_kernel_apply(fm, coords: SphericalCoord, wts: MetaKernelWeights,
                      neighborhood: tuple[int, int] = (3, 3), exact: bool = True) -> np.ndarray:
    """Meta-Kernel convolution with externally supplied weights.

    For each center pixel, every neighbour's features are gated by the offset
    MLP evaluated at the neighbour's relative spherical offset, the gated
    features are concatenated in row-major window order and passed through
    the output layer.  Neighbours with zero range, and rows outside the image,
    contribute zero features.
    """
    fm = np.asarray(fm, dtype=np.float64)
    if fm.ndim == 2:
        fm = fm[..., None]
    kh, kw = neighborhood
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("neighborhood dimensions must be odd")
    height, width, c_in = fm.shape
    r, az, el = (np.broadcast_to(np.asarray(v, dtype=np.float64), (height, width))
                 for v in coords)
    if c_in != wts.c_in:
        raise ValueError(f"weights expect {wts.c_in} channels, feature map has {c_in}")
    if kh * kw != wts.k:
        raise ValueError(f"weights expect {wts.k} neighbours, window has {kh * kw}")

    ph, pw = kh // 2, kw // 2
    feats = circular_pad(fm * (r > 0)[..., None], pw, ph)
    pr = circular_pad(r, pw, ph)
    paz = circular_pad(az, pw, ph)
    pel = circular_pad(el, pw, ph)
    gated = np.empty((height, width, kh * kw, c_in))
    for n, (di, dj) in enumerate(np.ndindex(kh, kw)):
        rows, cols = slice(di, di + height), slice(dj, dj + width)
        gamma = relative_spherical_offset(
            SphericalCoord(pr[rows, cols], paz[rows, cols], pel[rows, cols]),
            SphericalCoord(r, az, el), exact=exact)
        gated[:, :, n] = wts.offset_mlp(gamma) * feats[rows, cols]
    return gated.reshape(height, width, -1) @ wts.w + wts.b
