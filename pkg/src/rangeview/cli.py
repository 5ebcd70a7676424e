"""Command-line entry point: ``rangeview <subcommand> ...``.

Exit status is 0 on success, 1 on a usage error and 2 when input data is
missing or malformed.  Numbers are printed in fixed notation with six
significant digits, independent of locale.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .calibration import HoughConfig, accumulate_votes, extract_beams
from .diffusion import analytic_gaussian_denoiser, ddim_sample, linear_schedule
from .metrics import (DEFAULT_BOUNDS, bev_histogram, chamfer, frechet_distance,
                      gaussian_stats, jsd, mmd, range_mae)
from .projection import Normalizer, normalize, project, unproject
from .synthetic import beam_scan, kitti_like_model
from .tasks import mask_sector, subsample_beams

log = logging.getLogger("rangeview")

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def fmt(v: float) -> str:
    """Fixed notation with six significant digits (``0`` prints as ``0.00000``)."""
    v = float(v)
    if not np.isfinite(v):
        return str(v)
    mag = int(np.floor(np.log10(abs(v)))) if v != 0 else 0
    return f"{v:.{max(0, 5 - mag)}f}"


def _cmd_synth(args):
    rng = np.random.default_rng(args.seed)
    model = kitti_like_model(args.beams, rng)
    cloud, _ = beam_scan(model, args.points_per_beam, rng, range_noise=args.range_noise,
                         width=args.pixel_width)
    io.write_kitti_bin(args.output, cloud)
    if args.model_out:
        io.write_beam_model(args.model_out, model)
    print(f"points={len(cloud)} beams={len(model)}")


def _cmd_calibrate(args):
    cfg = HoughConfig(h_min=args.h_min, h_max=args.h_max, h_bins=args.h_bins,
                      phi_min=np.deg2rad(args.phi_min_deg), phi_max=np.deg2rad(args.phi_max_deg),
                      phi_bins=args.phi_bins, num_beams=args.num_beams,
                      suppression_radius=args.suppression_radius, d_min=args.d_min)
    acc = None
    for path in args.clouds:
        part = accumulate_votes(io.read_kitti_bin(path, args.stride), cfg, workers=args.workers)
        acc = part if acc is None else acc.merge(part)
        log.info("voted %s", path)
    model = extract_beams(acc, cfg.num_beams)
    io.write_beam_model(args.out, model)
    if args.plot:
        from .plotting import plot_hough_accumulator
        plot_hough_accumulator(acc, args.plot, model)
    print(f"beams={len(model)} votes={acc.total}")


def _cmd_project(args):
    model = io.read_beam_model(args.model)
    cloud = io.read_kitti_bin(args.input, args.stride)
    img = project(cloud, model, args.width)
    io.write_range_image(args.output, img)
    if args.normalized_out:
        nz = Normalizer(args.normalizer, args.max_range)
        io.write_container(args.normalized_out, b"RGIM", normalize(img, nz))
    if args.plot:
        from .plotting import plot_projection_comparison
        plot_projection_comparison(cloud, model, args.width, args.plot)
    print(f"points={len(cloud)} valid_pixels={int(img.valid.sum())} "
          f"height={img.height} width={img.width}")


def _cmd_unproject(args):
    model = io.read_beam_model(args.model)
    cloud = unproject(io.read_range_image(args.input), model)
    io.write_kitti_bin(args.output, cloud)
    print(f"points={len(cloud)}")


def _cmd_subsample(args):
    img = io.read_range_image(args.input)
    out = subsample_beams(img, args.factor)
    io.write_range_image(args.output, out)
    if args.model:
        if not args.model_out:
            raise UsageError("--model requires --model-out")
        model = io.read_beam_model(args.model)
        io.write_beam_model(args.model_out, model.subset(np.arange(0, len(model), args.factor)))
    print(f"height={out.height} width={out.width}")


def _cmd_mask(args):
    img = io.read_range_image(args.input)
    out, mask = mask_sector(img, args.center_deg, args.width_deg)
    io.write_range_image(args.output, out)
    if args.mask_out:
        io.write_mask(args.mask_out, mask)
    print(f"masked_columns={int(mask.mask[0].sum())}")


def _load_dir(path, stride):
    files = sorted(Path(path).glob("*.bin"))
    if not files:
        raise FileNotFoundError(f"no .bin files in {path}")
    return [io.read_kitti_bin(f, stride) for f in files]


def _cmd_bev_metrics(args):
    bounds = tuple(args.bounds)
    ha = [bev_histogram(c, bounds, args.bins) for c in _load_dir(args.set_a, args.stride)]
    hb = [bev_histogram(c, bounds, args.bins) for c in _load_dir(args.set_b, args.stride)]
    j = jsd(ha, hb)
    m = mmd(ha, hb, args.bandwidth)
    if args.plot:
        from .metrics import BEVHistogram
        from .plotting import plot_bev_pair
        pool = lambda hs: BEVHistogram(np.sum([h.bins for h in hs], axis=0), bounds)
        plot_bev_pair(pool(ha), pool(hb), args.plot)
    print(f"jsd={fmt(j)} mmd={fmt(m)}")


def _cmd_chamfer(args):
    d = chamfer(io.read_kitti_bin(args.a, args.stride), io.read_kitti_bin(args.b, args.stride))
    print(f"chamfer={fmt(d)}")


def _cmd_mae(args):
    d = range_mae(io.read_range_image(args.a), io.read_range_image(args.b), args.policy)
    print(f"mae={fmt(d)}")


def _cmd_frechet(args):
    res = frechet_distance(gaussian_stats(io.read_features(args.a)),
                           gaussian_stats(io.read_features(args.b)))
    line = f"frechet={fmt(res.distance)}"
    if res.jitter:
        line += f" jitter={fmt(res.jitter)}"
    print(line)


def _vector_arg(values, dim, name):
    v = np.asarray(values, dtype=np.float64)
    if v.size == 1:
        return np.full(dim, v.item())
    if v.size != dim:
        raise UsageError(f"{name} needs 1 or {dim} values, got {v.size}")
    return v


def _cmd_ddim_demo(args):
    mean = _vector_arg(args.target_mean, args.dim, "--target-mean")
    var = _vector_arg(args.target_var, args.dim, "--target-var")
    sched = linear_schedule(args.t, args.beta_start, args.beta_end)
    den = analytic_gaussian_denoiser(mean, var, sched)
    x = ddim_sample(den, sched, args.steps, (args.n_samples, args.dim), rng=args.seed)
    print(f"alpha_bar_T={fmt(sched.alpha_bar[-1])} steps={args.steps} n={args.n_samples}")
    for i in range(args.dim):
        print(f"dim={i} mean={fmt(x[:, i].mean())} var={fmt(x[:, i].var(ddof=1))}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rangeview", description="Range-view LiDAR toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("synth", help="write a synthetic beam-consistent scan")
    s.add_argument("output")
    s.add_argument("--beams", type=int, default=64)
    s.add_argument("--points-per-beam", type=int, default=2000)
    s.add_argument("--range-noise", type=float, default=0.01)
    s.add_argument("--pixel-width", type=int, default=None,
                   help="place points at distinct pixel-center azimuths of this width")
    s.add_argument("--model-out")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_synth)

    d = HoughConfig()
    s = sub.add_parser("calibrate", help="estimate beam heights and pitches")
    s.add_argument("clouds", nargs="+")
    s.add_argument("--out", required=True)
    s.add_argument("--num-beams", type=int, default=d.num_beams)
    s.add_argument("--h-min", type=float, default=d.h_min)
    s.add_argument("--h-max", type=float, default=d.h_max)
    s.add_argument("--h-bins", type=int, default=d.h_bins)
    s.add_argument("--phi-min-deg", type=float, default=-30.0)
    s.add_argument("--phi-max-deg", type=float, default=10.0)
    s.add_argument("--phi-bins", type=int, default=d.phi_bins)
    s.add_argument("--suppression-radius", type=int, default=d.suppression_radius)
    s.add_argument("--d-min", type=float, default=d.d_min)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--stride", type=int, default=4)
    s.add_argument("--plot", help="write the vote accumulator figure here")
    s.set_defaults(func=_cmd_calibrate)

    s = sub.add_parser("project", help="point cloud -> range image")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--model", required=True)
    s.add_argument("--width", type=int, default=1024)
    s.add_argument("--stride", type=int, default=4)
    s.add_argument("--normalizer", choices=["log", "linear"], default="log")
    s.add_argument("--max-range", type=float, default=80.0)
    s.add_argument("--normalized-out", help="also write the [-1, 1] network input tensor")
    s.add_argument("--plot", help="write a shared-origin vs calibrated comparison figure")
    s.set_defaults(func=_cmd_project)

    s = sub.add_parser("unproject", help="range image -> point cloud")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--model", required=True)
    s.set_defaults(func=_cmd_unproject)

    s = sub.add_parser("subsample", help="keep every factor-th beam")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--factor", type=int, required=True)
    s.add_argument("--model", help="beam model to subsample alongside the image")
    s.add_argument("--model-out")
    s.set_defaults(func=_cmd_subsample)

    s = sub.add_parser("mask", help="blank an azimuth sector")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--center-deg", type=float, default=0.0)
    s.add_argument("--width-deg", type=float, default=22.5)
    s.add_argument("--mask-out")
    s.set_defaults(func=_cmd_mask)

    s = sub.add_parser("bev-metrics", help="JSD and MMD between two directories of scans")
    s.add_argument("--set-a", required=True)
    s.add_argument("--set-b", required=True)
    s.add_argument("--bounds", type=float, nargs=4, default=list(DEFAULT_BOUNDS),
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    s.add_argument("--bins", type=int, default=100)
    s.add_argument("--bandwidth", type=float, default=None)
    s.add_argument("--stride", type=int, default=4)
    s.add_argument("--plot", help="write pooled BEV histograms of both sets here")
    s.set_defaults(func=_cmd_bev_metrics)

    s = sub.add_parser("chamfer", help="Chamfer distance between two scans")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--stride", type=int, default=4)
    s.set_defaults(func=_cmd_chamfer)

    s = sub.add_parser("mae", help="range mean absolute error between two range images")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--policy", choices=["all", "both_valid"], default="all")
    s.set_defaults(func=_cmd_mae)

    s = sub.add_parser("frechet", help="Frechet distance between two FEAT feature files")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=_cmd_frechet)

    s = sub.add_parser("ddim-demo", help="DDIM sampling of a Gaussian target")
    s.add_argument("--t", type=int, default=1000)
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("--dim", type=int, default=4)
    s.add_argument("--target-mean", type=float, nargs="+", default=[0.0])
    s.add_argument("--target-var", type=float, nargs="+", default=[1.0])
    s.add_argument("--n-samples", type=int, default=10000)
    s.add_argument("--beta-start", type=float, default=1e-4)
    s.add_argument("--beta-end", type=float, default=2e-2)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_ddim_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, IndexError) as exc:
        print(f"rangeview: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
