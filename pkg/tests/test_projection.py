import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rangeview.calibration import assign_beam
from rangeview.geometry import BeamModel, PointCloud, cart_to_beam_spherical
from rangeview.projection import (Normalizer, RangeImage, denormalize, normalize, project,
                                  unproject)
from rangeview.synthetic import beam_scan

FLAT = BeamModel([0.0], [0.0])


def _brute_rasterize(cloud, model, width):
    best = {}
    for idx, p in enumerate(cloud.xyz):
        j = int(assign_beam(p, model))
        r, theta, _ = cart_to_beam_spherical(p, j, model)
        u = int(np.floor((theta + np.pi) / (2 * np.pi) * width)) % width
        if (j, u) not in best or r < best[(j, u)][0]:
            best[(j, u)] = (r, cloud.intensity[idx])
    rng_img = np.zeros((len(model), width))
    for (j, u), (r, _) in best.items():
        rng_img[j, u] = r
    return rng_img


def test_single_point_mid_column():
    img = project(PointCloud([[10.0, 0.0, 0.0]], [0.3]), FLAT, 1024)
    assert img.range[0, 512] == 10.0
    assert img.intensity[0, 512] == 0.3
    assert img.valid.sum() == 1


def test_single_point_quarter_turn():
    img = project(PointCloud([[0.0, 10.0, 0.0]]), FLAT, 1024)
    assert img.range[0, 768] == pytest.approx(10.0)


def test_nearest_wins_on_shared_ray():
    img = project(PointCloud([[9.0, 0.0, 0.0], [7.0, 0.0, 0.0]], [0.9, 0.1]), FLAT, 1024)
    assert img.range[0, 512] == 7.0
    assert img.intensity[0, 512] == 0.1


def test_azimuth_pi_wraps_to_column_zero():
    img = project(PointCloud([[-5.0, 0.0, 0.0]]), FLAT, 8)
    assert img.range[0, 0] == 5.0


def test_empty_cloud_gives_empty_image(four_beams):
    img = project(PointCloud.empty(), four_beams, 16)
    assert img.range.shape == (4, 16) and not img.valid.any()


@pytest.mark.parametrize("seed", range(5))
def test_nearest_wins_matches_brute_force(four_beams, seed):
    rng = np.random.default_rng(seed)
    cloud, _ = beam_scan(four_beams, 60, rng, r_min=2, r_max=20)
    img = project(cloud, four_beams, 16)
    np.testing.assert_array_equal(img.range, _brute_rasterize(cloud, four_beams, 16))
    assert np.all(img.intensity[~img.valid] == 0)


def test_unproject_examples():
    assert len(unproject(RangeImage.zeros(1, 1024), FLAT)) == 0
    img = RangeImage.zeros(1, 1024)
    img.range[0, 512] = 10.0
    img.intensity[0, 512] = 0.5
    cloud = unproject(img, FLAT)
    delta = np.pi / 1024
    np.testing.assert_allclose(cloud.xyz[0], [10 * np.cos(delta), 10 * np.sin(delta), 0],
                               atol=1e-12)
    assert cloud.intensity[0] == 0.5


def test_unproject_height_mismatch(four_beams):
    with pytest.raises(ValueError):
        unproject(RangeImage.zeros(3, 8), four_beams)


def test_unproject_count(four_beams, rng):
    cloud, _ = beam_scan(four_beams, 300, rng)
    img = project(cloud, four_beams, 64)
    assert len(unproject(img, four_beams)) == int(img.valid.sum())


def test_round_trip_within_azimuth_quantization(kitti_model, rng):
    width = 1024
    cloud, _ = beam_scan(kitti_model, 400, rng, width=width, range_noise=0.01)
    # push every point off its pixel center, staying inside the pixel
    jitter = rng.uniform(-0.49, 0.49, len(cloud)) * 2 * np.pi / width
    c, s = np.cos(jitter), np.sin(jitter)
    x, y, z = cloud.xyz.T
    cloud = PointCloud(np.stack([c * x - s * y, s * x + c * y, z], axis=1), cloud.intensity)
    img = project(cloud, kitti_model, width)
    back = unproject(img, kitti_model)
    assert len(back) == len(cloud)
    # match by pixel: both sides are keyed by (row, column)
    rows = assign_beam(cloud.xyz, kitti_model)
    r, theta, _ = cart_to_beam_spherical(cloud.xyz, rows, kitti_model)
    cols = np.mod(np.floor((theta + np.pi) / (2 * np.pi) * width).astype(int), width)
    order = np.lexsort((cols, rows))
    err = np.linalg.norm(back.xyz - cloud.xyz[order], axis=1)
    assert np.all(err < 2 * np.pi / width * r[order])


def test_round_trip_at_pixel_centers(kitti_model, rng):
    cloud, _ = beam_scan(kitti_model, 500, rng, width=1024)
    back = unproject(project(cloud, kitti_model, 1024), kitti_model)
    a = cloud.xyz[np.lexsort(cloud.xyz.T)]
    b = back.xyz[np.lexsort(back.xyz.T)]
    assert np.max(np.abs(a - b)) < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-64, 64))
def test_rotation_shifts_columns(seed, k):
    model = BeamModel([0.1, -0.1, 0.05], [0.05, -0.1, -0.3])
    width = 64
    cloud, _ = beam_scan(model, 20, np.random.default_rng(seed), width=width)
    a = project(cloud, model, width).roll(k)
    b = project(cloud.rotate_z(2 * np.pi * k / width), model, width)
    np.testing.assert_array_equal(a.valid, b.valid)
    np.testing.assert_allclose(a.range, b.range, atol=1e-9)
    np.testing.assert_array_equal(a.intensity, b.intensity)


@pytest.mark.parametrize("scheme", ["log", "linear"])
def test_normalize_endpoints(scheme):
    nz = Normalizer(scheme, 80.0)
    img = RangeImage(np.array([[0.0, 80.0, 200.0]]), np.array([[0.0, 1.0, 0.5]]))
    out = normalize(img, nz)
    assert out[0, 0, 0] == -1.0
    assert out[0, 1, 0] == pytest.approx(1.0, abs=1e-15)
    assert out[0, 2, 0] == pytest.approx(1.0, abs=1e-15)  # clamped
    np.testing.assert_array_equal(out[0, :, 1], [-1.0, 1.0, 0.0])


@pytest.mark.parametrize("scheme", ["log", "linear"])
def test_normalize_round_trip(scheme, rng):
    nz = Normalizer(scheme, 80.0)
    r = rng.uniform(0, 80, (100, 100))
    i = rng.uniform(0, 1, (100, 100))
    back = denormalize(normalize(RangeImage(r, i), nz), nz)
    assert np.max(np.abs(back.range - r)) < 1e-6
    assert np.max(np.abs(back.intensity - i)) < 1e-6


def test_normalizer_validation():
    with pytest.raises(ValueError):
        Normalizer("cubic", 80.0)
    with pytest.raises(ValueError):
        Normalizer("log", 0.0)
