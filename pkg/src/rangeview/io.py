"""File formats: KITTI-style point records, binary containers, beam models.

Every binary container is a 4-byte magic followed by little-endian u32
extents and a row-major payload:

=======  ===========================  ========
magic    extents                      payload
=======  ===========================  ========
RGIM     H, W, C (C = 2)              float32, channels interleaved (range, intensity)
FEAT     n, D                         float32
MASK     H, W                         uint8
MKWT     C_mid, C_in, K, C_out        float32 arrays, see :func:`write_meta_kernel`
=======  ===========================  ========
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .geometry import BeamModel, PointCloud
from .projection import RangeImage
from .rangeops import MetaKernelWeights
from .tasks import SectorMask

CONTAINERS = {
    b"RGIM": (3, np.dtype("<f4")),
    b"FEAT": (2, np.dtype("<f4")),
    b"MASK": (2, np.dtype("u1")),
}


class FormatError(ValueError):
    """A file does not match the layout its reader expects."""


def write_container(path, magic: bytes, arr) -> None:
    ndim, dtype = CONTAINERS[magic]
    arr = np.ascontiguousarray(arr, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"{magic.decode()} payload must be {ndim}-D, got {arr.ndim}-D")
    with open(path, "wb") as fh:
        fh.write(magic + struct.pack(f"<{ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def read_container(path, magic: bytes) -> np.ndarray:
    ndim, dtype = CONTAINERS[magic]
    with open(path, "rb") as fh:
        data = fh.read()
    header = 4 + 4 * ndim
    if len(data) < header:
        raise FormatError(f"{path}: {len(data)} bytes is shorter than the "
                          f"{header}-byte {magic.decode()} header")
    if data[:4] != magic:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")
    shape = struct.unpack(f"<{ndim}I", data[4:header])
    expected = header + int(np.prod(shape)) * dtype.itemsize
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for extents {shape}, "
                          f"found {len(data)}")
    return np.frombuffer(data, dtype=dtype, offset=header).reshape(shape).copy()


def write_range_image(path, img: RangeImage) -> None:
    write_container(path, b"RGIM", img.stack())


def read_range_image(path) -> RangeImage:
    arr = read_container(path, b"RGIM")
    if arr.shape[2] != 2:
        raise FormatError(f"{path}: range images carry 2 channels, found {arr.shape[2]}")
    return RangeImage.from_stack(arr.astype(np.float64))


def write_features(path, features) -> None:
    write_container(path, b"FEAT", np.asarray(features))


def read_features(path) -> np.ndarray:
    return read_container(path, b"FEAT").astype(np.float64)


def write_mask(path, mask: SectorMask | np.ndarray) -> None:
    arr = mask.mask if isinstance(mask, SectorMask) else mask
    write_container(path, b"MASK", np.asarray(arr))


def read_mask(path) -> np.ndarray:
    return read_container(path, b"MASK")


def write_meta_kernel(path, wts: MetaKernelWeights) -> None:
    """Header dims, then w1, b1, w2, b2, w, b as float32 in that order."""
    dims = (wts.c_mid, wts.c_in, wts.k, wts.c_out)
    with open(path, "wb") as fh:
        fh.write(b"MKWT" + struct.pack("<4I", *dims))
        for a in (wts.phi_w1, wts.phi_b1, wts.phi_w2, wts.phi_b2, wts.w, wts.b):
            fh.write(np.ascontiguousarray(a, dtype="<f4").tobytes())


def read_meta_kernel(path) -> MetaKernelWeights:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 20 or data[:4] != b"MKWT":
        raise FormatError(f"{path}: not a MKWT file")
    c_mid, c_in, k, c_out = struct.unpack("<4I", data[4:20])
    shapes = [(3, c_mid), (c_mid,), (c_mid, c_in), (c_in,), (k * c_in, c_out), (c_out,)]
    expected = 20 + 4 * sum(int(np.prod(s)) for s in shapes)
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    arrays, off = [], 20
    for s in shapes:
        n = int(np.prod(s))
        arrays.append(np.frombuffer(data, "<f4", n, off).reshape(s).astype(np.float64))
        off += 4 * n
    return MetaKernelWeights(*arrays)


def read_kitti_bin(path, stride: int = 4) -> PointCloud:
    """Little-endian float32 records of ``stride`` values starting with x, y, z, intensity.

    Intensity is clamped to [0, 1]; nuScenes sweeps use ``stride=5``.
    """
    if stride < 4:
        raise ValueError("records need at least x, y, z and intensity")
    size = os.path.getsize(path)
    rec = 4 * stride
    if size % rec:
        raise FormatError(f"{path}: size {size} is not a multiple of the {rec}-byte record")
    raw = np.fromfile(path, dtype="<f4").reshape(-1, stride)[:, :4].astype(np.float64)
    finite = np.isfinite(raw).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise FormatError(f"{path}: non-finite value in record {bad} (byte offset {bad * rec})")
    return PointCloud(raw[:, :3], np.clip(raw[:, 3], 0.0, 1.0))


def write_kitti_bin(path, cloud: PointCloud) -> None:
    arr = np.column_stack([cloud.xyz, cloud.intensity]).astype("<f4")
    arr.tofile(path)


def write_beam_model(path, model: BeamModel) -> None:
    lines = [str(len(model))]
    lines += [f"{h:.17g} {p:.17g}" for h, p in zip(model.heights, model.pitches)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_beam_model(path) -> BeamModel:
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    try:
        n = int(lines[0][0])
        pairs = [(float(a), float(b)) for a, b in lines[1:]]
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: malformed beam model ({exc})") from None
    if len(pairs) != n:
        raise FormatError(f"{path}: header announces {n} beams, found {len(pairs)}")
    return BeamModel.from_pairs(pairs)
