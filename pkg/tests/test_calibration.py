import numpy as np
import pytest

from rangeview.calibration import (HoughAccumulator, HoughConfig, accumulate_votes, assign_beam,
                                   calibrate, extract_beams)
from rangeview.geometry import BeamModel, PointCloud
from rangeview.synthetic import beam_scan, kitti_like_model


def _brute_votes(cloud, cfg):
    """Reference accumulator built one (point, height) pair at a time."""
    grid = np.zeros((cfg.h_bins, cfg.phi_bins), dtype=np.int64)
    for (x, y, z) in cloud.xyz:
        d = np.hypot(x, y)
        if d <= cfg.d_min:
            continue
        for i, h in enumerate(cfg.h_centers):
            phi = np.arctan2(z - h, d)
            if cfg.phi_min <= phi < cfg.phi_max:
                k = int(np.floor((phi - cfg.phi_min) / cfg.phi_step))
                if k < cfg.phi_bins:
                    grid[i, k] += 1
    return grid


def _local_maxima(grid, count):
    """Brute-force peak search: cells not exceeded by any 8-neighbour, strongest first."""
    peaks = []
    rows, cols = grid.shape
    for i, k in zip(*np.nonzero(grid)):
        v = grid[i, k]
        nb = grid[max(i - 1, 0):i + 2, max(k - 1, 0):k + 2]
        if v >= nb.max():
            peaks.append((v, i, k))
    peaks.sort(key=lambda p: -p[0])
    kept = []
    for v, i, k in peaks:
        if all(abs(i - a) > 3 or abs(k - b) > 3 for _, a, b in kept):
            kept.append((v, i, k))
        if len(kept) == count:
            break
    return kept


def test_single_point_single_height():
    cfg = HoughConfig(h_min=0.0, h_max=1.0, h_bins=2, phi_bins=40, num_beams=1)
    acc = accumulate_votes(PointCloud([[10.0, 0.0, 0.0]]), cfg)
    # h-bin 0 is centered at h = 0 -> atan2(0, 10) = 0
    k0 = int((0.0 - cfg.phi_min) // cfg.phi_step)
    assert acc.grid[0, k0] == 1
    assert acc.grid[0].sum() == 1


def test_votes_match_brute_force(four_beams, rng):
    cfg = HoughConfig(h_bins=21, phi_bins=200, num_beams=4)
    cloud, _ = beam_scan(four_beams, 30, rng)
    cloud = cloud.concat(PointCloud([[1.0, 0.5, 0.0], [0.0, 0.0, 3.0]]))  # near field
    acc = accumulate_votes(cloud, cfg, chunk=17)
    np.testing.assert_array_equal(acc.grid, _brute_votes(cloud, cfg))
    assert acc.total <= len(cloud) * cfg.h_bins


def test_parallel_votes_equal_serial(four_beams, rng):
    cloud, _ = beam_scan(four_beams, 500, rng)
    cfg = HoughConfig(num_beams=4)
    a = accumulate_votes(cloud, cfg, chunk=256)
    b = accumulate_votes(cloud, cfg, chunk=256, workers=4)
    np.testing.assert_array_equal(a.grid, b.grid)


def test_merge_is_commutative(four_beams, rng):
    cfg = HoughConfig(num_beams=4)
    c1, _ = beam_scan(four_beams, 50, rng)
    c2, _ = beam_scan(four_beams, 50, rng)
    a, b = accumulate_votes(c1, cfg), accumulate_votes(c2, cfg)
    np.testing.assert_array_equal((a + b).grid, (b + a).grid)
    np.testing.assert_array_equal((a + b).grid, accumulate_votes(c1.concat(c2), cfg).grid)


def test_accumulate_errors():
    with pytest.raises(ValueError):
        accumulate_votes(PointCloud.empty(), HoughConfig())
    with pytest.raises(ValueError):
        HoughConfig(h_min=1.0, h_max=0.0)
    with pytest.raises(ValueError):
        HoughConfig(phi_bins=1)
    with pytest.raises(ValueError):
        HoughConfig(num_beams=0)


def test_four_beam_peaks_within_one_cell(four_beams):
    cfg = HoughConfig(num_beams=4)
    cloud, _ = beam_scan(four_beams, 2000, np.random.default_rng(3))
    acc = accumulate_votes(cloud, cfg)
    peaks = _local_maxima(acc.grid, 4)
    assert len(peaks) == 4
    true_cells = [(int(np.argmin(np.abs(cfg.h_centers - h))),
                   int((p - cfg.phi_min) // cfg.phi_step))
                  for h, p in zip(four_beams.heights, four_beams.pitches)]
    for ti, tk in true_cells:
        assert any(abs(i - ti) <= 1 and abs(k - tk) <= 1 for _, i, k in peaks)


def test_extract_single_cell():
    cfg = HoughConfig(num_beams=1)
    acc = HoughAccumulator.zeros(cfg)
    i = int(np.argmin(np.abs(cfg.h_centers - 0.1)))
    k = int((-0.05 - cfg.phi_min) // cfg.phi_step)
    acc.grid[i, k] = 7
    model = extract_beams(acc, 1)
    assert model.heights[0] == pytest.approx(0.1, abs=cfg.h_centers[1] - cfg.h_centers[0])
    assert model.pitches[0] == pytest.approx(-0.05, abs=cfg.phi_step)
    assert model.heights[0] == cfg.h_centers[i]
    assert model.pitches[0] == cfg.phi_centers[k]


def test_extract_too_many_peaks():
    cfg = HoughConfig(num_beams=3)
    acc = HoughAccumulator.zeros(cfg)
    acc.grid[10, 10] = 5
    acc.grid[100, 500] = 4
    with pytest.raises(ValueError, match="only 2 peaks"):
        extract_beams(acc, 3)
    with pytest.raises(ValueError):
        extract_beams(HoughAccumulator.zeros(cfg), 1)


def test_extract_ties_prefer_lower_cell():
    cfg = HoughConfig(num_beams=1)
    acc = HoughAccumulator.zeros(cfg)
    acc.grid[50, 900] = 3
    acc.grid[200, 100] = 3
    model = extract_beams(acc, 1)
    assert model.heights[0] == cfg.h_centers[50]


def test_extract_sorted_and_exact_length(four_beams):
    cloud, _ = beam_scan(four_beams, 1000, np.random.default_rng(1))
    model = calibrate([cloud], HoughConfig(num_beams=4))
    assert len(model) == 4
    assert np.all(np.diff(model.pitches) < 0)


def test_kitti_like_recovery_within_one_phi_cell(kitti_model):
    cfg = HoughConfig()
    cloud, _ = beam_scan(kitti_model, 2000, np.random.default_rng(11), range_noise=0.01)
    model = calibrate([cloud], cfg)
    assert np.all(np.diff(model.pitches) < 0)
    assert np.max(np.abs(model.pitches - kitti_model.pitches)) <= cfg.phi_step


def test_calibrate_composition(four_beams, rng):
    cfg = HoughConfig(num_beams=4)
    cloud, _ = beam_scan(four_beams, 500, rng)
    direct = extract_beams(accumulate_votes(cloud, cfg), 4)
    composed = calibrate([cloud], cfg)
    np.testing.assert_array_equal(composed.heights, direct.heights)
    np.testing.assert_array_equal(composed.pitches, direct.pitches)
    with pytest.raises(ValueError):
        calibrate([], cfg)


def test_calibrate_yaw_invariant(four_beams, rng):
    cfg = HoughConfig(num_beams=4)
    cloud, _ = beam_scan(four_beams, 500, rng)
    a = accumulate_votes(cloud, cfg)
    b = accumulate_votes(cloud.rotate_z(1.234), cfg)
    # rotation perturbs d in the last ulp only; votes may move by one cell at bin edges
    assert np.abs(a.grid - b.grid).sum() <= 2 * 1e-3 * a.total


def test_pooling_clouds_does_not_hurt():
    # sparse, angularly noisy scans: a single scan is unreliable, ten pooled are not
    rng = np.random.default_rng(0)
    model = kitti_like_model(16, rng)
    cfg = HoughConfig(num_beams=16)
    clouds = [beam_scan(model, 200, rng, range_noise=0.01, pitch_noise=np.deg2rad(0.01))[0]
              for _ in range(10)]

    def err(m):
        return (np.max(np.abs(m.heights - model.heights)) / 0.0025
                + np.max(np.abs(m.pitches - model.pitches)) / cfg.phi_step)

    single, pooled = calibrate(clouds[:1], cfg), calibrate(clouds, cfg)
    assert err(pooled) <= err(single)
    assert np.max(np.abs(pooled.heights - model.heights)) < 0.005


def test_assign_beam_on_cone(four_beams, rng):
    cloud, labels = beam_scan(four_beams, 100, rng)
    assert np.array_equal(assign_beam(cloud.xyz, four_beams), labels)
    assert assign_beam(cloud.xyz[0], four_beams) == labels[0]


def test_assign_beam_tie_goes_to_smaller_index():
    model = BeamModel([0.0, 0.0], [0.1, -0.1])
    assert assign_beam((5.0, 0.0, 0.0), model) == 0


def test_assign_beam_axis_point_errors(four_beams):
    with pytest.raises(ValueError):
        assign_beam((0.0, 0.0, 1.0), four_beams)


def test_assign_beam_accuracy(kitti_model):
    cloud, labels = beam_scan(kitti_model, 500, np.random.default_rng(5), range_noise=0.01)
    acc = np.mean(assign_beam(cloud.xyz, kitti_model) == labels)
    assert acc >= 0.999
