"""Command-line interface: ``jdac <subcommand> ...``.

Exit status is 0 on success, 2 on usage errors and 1 on runtime errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

from . import __version__
from .corruption import ArtifactSpec, NoiseSpec, corrupt
from .engine import JdacConfig, jdac_run
from .errors import JdacError
from .estimation import DEFAULT_STOP_THRESHOLD, estimate_noise
from .io import read_volume, write_rvol
from .metrics import gradient_metrics, image_metrics
from .operators import make_corrector, make_denoiser
from .pipeline import PipelineManifest, run_pipeline
from .volume import PHANTOM_KINDS, make_phantom


def _triple(kind):
    def parse(text):
        try:
            vals = [kind(p) for p in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected three comma-separated values, got {text!r}")
        if len(vals) != 3 or min(vals) <= 0:
            raise argparse.ArgumentTypeError(f"expected three positive values, got {text!r}")
        return tuple(vals)

    return parse


def _spec(cls):
    def parse(text):
        try:
            return cls.parse(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc))

    parse.__name__ = cls.__name__
    return parse


def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _learning_rate(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 < x <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {x}")
    return x


def _non_negative(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {x}")
    return x


def build_parser():
    p = argparse.ArgumentParser(prog="jdac", description="Joint denoising and artifact correction of 3D volumes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ph = sub.add_parser("phantom", help="write a synthetic test volume")
    ph.add_argument("--dims", type=_triple(int), default=(64, 64, 64), help="L,W,H (default 64,64,64)")
    ph.add_argument("--kind", choices=PHANTOM_KINDS, default="ellipsoids")
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--spacing", type=_triple(float), default=(1.0, 1.0, 1.0), help="voxel size in mm")
    ph.add_argument("--out", required=True)

    co = sub.add_parser("corrupt", help="apply an artifact, then noise")
    co.add_argument("--in", dest="input", required=True)
    co.add_argument("--artifact", type=_spec(ArtifactSpec), default=ArtifactSpec("none"),
                    help="none | gibbs:A | motion:default | ghosting:G,S[,AXIS] | spike:N,S")
    co.add_argument("--noise", type=_spec(NoiseSpec), default=NoiseSpec("gaussian", 0.0),
                    help="none | gaussian:S | rician:S | speckle:S | saltpepper:D")
    co.add_argument("--seed", type=int, default=0)
    co.add_argument("--out", required=True)

    es = sub.add_parser("estimate", help="print the gradient-map noise estimate")
    es.add_argument("--in", dest="input", required=True)
    es.add_argument("--raw", action="store_true", help="print the uncalibrated gradient std")

    re = sub.add_parser("restore", help="run the iterative restoration")
    re.add_argument("--in", dest="input", required=True)
    re.add_argument("--denoiser", default="gauss", help="identity | gauss[:W] | external:CMD")
    re.add_argument("--corrector", default="identity", help="identity | spike-notch[:Z] | external:CMD")
    re.add_argument("--delta", type=_non_negative, default=DEFAULT_STOP_THRESHOLD,
                    help="early-stop threshold on the raw gradient std (default 0.028)")
    re.add_argument("--lr", type=_learning_rate, default=0.5, help="learning rate blending x towards v")
    re.add_argument("--max-iters", type=_positive_int, default=4)
    re.add_argument("--no-pre-check", action="store_true", help="always run at least one iteration")
    re.add_argument("--no-clip", action="store_true", help="do not clip the output to [0, 1]")
    re.add_argument("--timeout", type=float, default=300.0, help="seconds per external operator call")
    re.add_argument("--out", required=True)
    re.add_argument("--report", help="write the run report as JSON")
    re.add_argument("--figure", help="write slices and the noise trace as an image")

    me = sub.add_parser("metrics", help="compare a volume with a reference")
    me.add_argument("--test", required=True)
    me.add_argument("--ref", required=True)
    me.add_argument("--gradient", action="store_true", help="score gradient-magnitude maps")
    me.add_argument("--json", action="store_true", help="print JSON instead of tab-separated lines")
    me.add_argument("--figure", help="write test/reference/difference slices as an image")

    pi = sub.add_parser("pipeline", help="corrupt, restore and score as described by a manifest")
    pi.add_argument("--manifest", required=True)
    return p


def _fmt(x):
    return "inf" if isinstance(x, float) and math.isinf(x) else f"{x:.6f}"


def _run(args, parser):
    if args.command == "phantom":
        write_rvol(make_phantom(args.dims, args.kind, args.seed, args.spacing), args.out)
    elif args.command == "corrupt":
        v = read_volume(args.input)
        artifact = dataclasses.replace(args.artifact, seed=args.seed)
        noise = dataclasses.replace(args.noise, seed=args.seed)
        write_rvol(corrupt(v, artifact, noise), args.out)
    elif args.command == "estimate":
        est = estimate_noise(read_volume(args.input))
        print(f"{est.raw_std if args.raw else est.sigma_e:.6f}")
    elif args.command == "restore":
        cfg = JdacConfig(delta_lr=args.lr, max_iters=args.max_iters, stop_threshold=args.delta,
                         pre_check=not args.no_pre_check, clip_output=not args.no_clip)
        try:
            d = make_denoiser(args.denoiser, timeout=args.timeout)
        except ValueError as exc:
            parser.error(f"argument --denoiser: {exc}")
        try:
            a = make_corrector(args.corrector, timeout=args.timeout)
        except ValueError as exc:
            parser.error(f"argument --corrector: {exc}")
        y = read_volume(args.input)
        report = jdac_run(y, d, a, cfg)
        write_rvol(report.output, args.out)
        if args.report:
            with open(args.report, "w") as f:
                f.write(report.to_json(args.out, indent=2))
        if args.figure:
            from .plotting import plot_restoration

            plot_restoration(y, report.output, report, args.figure)
        print(f"iterations\t{report.iterations_run}\nstop_reason\t{report.stop_reason}")
    elif args.command == "metrics":
        test, ref = read_volume(args.test), read_volume(args.ref)
        rep = gradient_metrics(test, ref) if args.gradient else image_metrics(test, ref)
        if args.json:
            print(json.dumps(rep.to_dict()))
        else:
            for key in ("psnr_db", "rmse", "ssim", "ms_ssim"):
                print(f"{key}\t{_fmt(getattr(rep, key))}")
            print(f"domain\t{rep.domain}")
        if args.figure:
            from .plotting import plot_comparison

            plot_comparison(test, ref, args.figure, gradient_domain=args.gradient)
    elif args.command == "pipeline":
        print(json.dumps(run_pipeline(PipelineManifest.load(args.manifest)), indent=2))
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _run(args, parser)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    except (JdacError, OSError, ValueError) as exc:
        print(f"jdac {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
