"""Command-line interface.

Subcommands: ``stitch`` (compose a panorama from images plus masks),
``synth`` (write a seeded ground-truth sequence), ``eval`` (score a
panorama against ground truth), ``sweep`` (metric table over overlap
buckets and resolutions) and ``segment-fallback`` (threshold segmenter).

Exit codes: 0 success, 2 registration failure (no usable overlap), 3
ordering failure (disconnected set or ambiguous orientation), 4 degenerate
point configuration, 5 file I/O failure, 64 usage error, 1 anything else.
Diagnostics go to stderr; data goes to stdout or the requested files.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import io as sio
from .composition import stitch_all
from .config import PipelineConfig, load_config
from .exceptions import (
    AmbiguousOrientation,
    ConfigError,
    DegenerateConfiguration,
    DisconnectedSet,
    InfeasibleSpec,
    RegistrationError,
    StitchError,
    TooManyImages,
)
from .harness import OVERLAP_BUCKETS, format_sweep_table, sweep
from .masks import fallback_segment, scaled_min_area
from .metrics import MetricReport, psnr, ssim
from .seam import OrientedGradientFeatures
from .synth import SynthSpec, feasible_screw_count, generate

EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _build_parser():
    parser = _Parser(prog="spinestitch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_stitch = sub.add_parser("stitch", help="compose a panorama from image slices")
    p_stitch.add_argument("--images", nargs="+", required=True, help="slice PNGs, any order")
    p_stitch.add_argument("--masks", nargs="+", help="instance-mask PNGs, one per image")
    p_stitch.add_argument(
        "--auto-segment", action="store_true", help="derive masks with the threshold segmenter"
    )
    p_stitch.add_argument("--threshold", type=float, default=0.7)
    p_stitch.add_argument("--min-area", type=int, default=None)
    p_stitch.add_argument("--config", help="pipeline config file (key = value lines)")
    p_stitch.add_argument("--output", required=True, help="panorama PNG path")
    p_stitch.add_argument("--report", help="report JSON path (default: <output>.report.json)")
    p_stitch.add_argument("--exact-order", action="store_true", help="exhaustive ordering (n <= 10)")
    p_stitch.add_argument("--reference", type=int, default=None, help="override reference index")
    p_stitch.add_argument(
        "--features", nargs="+",
        help="precomputed feature-map files, one per image (sets feature_source=file)",
    )

    p_synth = sub.add_parser("synth", help="generate a seeded synthetic sequence")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--resolution", type=int, default=512)
    p_synth.add_argument("--slices", type=int, default=5)
    p_synth.add_argument("--overlap", type=float, default=0.5)
    p_synth.add_argument("--screws", type=int, default=None, help="per-slice count (default: nearest feasible to 6)")
    p_synth.add_argument("--warp", default="translation",
                         choices=("translation", "similarity", "affine", "projective"))
    p_synth.add_argument("--noise", type=float, default=0.0)
    p_synth.add_argument("--seed", type=int, default=0)

    p_eval = sub.add_parser("eval", help="score a panorama against ground truth")
    p_eval.add_argument("--panorama", required=True)
    p_eval.add_argument("--truth", required=True,
                        help="synthetic output directory (or a bare PNG for frame-aligned comparison)")
    p_eval.add_argument("--report", help="stitch report JSON (enables truth-frame alignment)")

    p_sweep = sub.add_parser("sweep", help="metric table over overlap buckets and resolutions")
    p_sweep.add_argument("--overlaps", default=None,
                         help="bucket=value pairs, e.g. 20-40=0.30,40-70=0.50,70-90=0.80")
    p_sweep.add_argument("--resolutions", default="512", help="comma-separated, e.g. 512,1024")
    p_sweep.add_argument("--seeds", type=int, default=10)
    p_sweep.add_argument("--slices", type=int, default=5)
    p_sweep.add_argument("--warp", default="projective",
                         choices=("translation", "similarity", "affine", "projective"))
    p_sweep.add_argument("--noise", type=float, default=0.01)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--seed", type=int, default=0, help="battery base seed")
    p_sweep.add_argument("--out", help="CSV output path")

    p_seg = sub.add_parser("segment-fallback", help="threshold segmenter for synthetic imagery")
    p_seg.add_argument("--image", required=True)
    p_seg.add_argument("--out", required=True)
    p_seg.add_argument("--threshold", type=float, default=0.7)
    p_seg.add_argument("--min-area", type=int, default=None)

    return parser


def _load_pipeline_config(args):
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if getattr(args, "exact_order", False):
        cfg.exact_order = True
    if getattr(args, "reference", None) is not None:
        cfg.reference_override = args.reference
    if getattr(args, "features", None):
        cfg.feature_source = "file"
    return cfg


def _cmd_stitch(args, parser):
    if len(args.images) < 2:
        parser.error("need at least two images")
    if args.auto_segment and args.masks:
        parser.error("--masks and --auto-segment are mutually exclusive")
    if not args.auto_segment:
        if not args.masks:
            parser.error("provide --masks or --auto-segment")
        if len(args.masks) != len(args.images):
            parser.error("need exactly one mask per image")
    cfg = _load_pipeline_config(args)

    images = [sio.load_image(p) for p in args.images]
    if args.auto_segment:
        min_area = args.min_area or scaled_min_area(images[0].shape[1])
        masks = [fallback_segment(im, args.threshold, min_area) for im in images]
    else:
        masks = [sio.load_mask(p) for p in args.masks]

    feature_stacks = None
    if cfg.feature_source == "file":
        if not args.features or len(args.features) != len(args.images):
            parser.error("feature_source=file needs one --features file per image")
        feature_stacks = [
            sio.load_feature_map(p, expect_shape=im.shape)
            for p, im in zip(args.features, images)
        ]

    result = stitch_all(
        images,
        masks,
        registration=cfg.registration(),
        weights=cfg.weights(),
        extractor=OrientedGradientFeatures(),
        blend=cfg.blend(),
        seam_axis=cfg.seam_axis,
        exact_order=cfg.exact_order,
        reference_override=cfg.reference_override,
        feature_stacks=feature_stacks,
    )

    out = Path(args.output)
    sio.save_image(out, result.panorama)
    _save_validity(out, result.validity)
    report_path = Path(args.report) if args.report else out.with_suffix(out.suffix + ".report.json")
    sio.save_report(report_path, result.report)
    print(f"panorama={out} report={report_path}", file=sys.stderr)
    return 0


def _save_validity(out, validity):
    from PIL import Image as PILImage

    vpath = out.with_suffix(out.suffix + ".valid.png")
    PILImage.fromarray((validity.astype(np.uint8)) * 255, mode="L").save(vpath, format="PNG")
    return vpath


def _cmd_synth(args, parser):
    screws = args.screws
    if screws is None:
        screws = feasible_screw_count(args.resolution, args.overlap)
    spec = SynthSpec(
        resolution=args.resolution,
        n_slices=args.slices,
        overlap_fraction=args.overlap,
        n_screws_per_slice=screws,
        warp_kind=args.warp,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    manifest = sio.write_truth(args.out, generate(spec))
    print(f"manifest={manifest}", file=sys.stderr)
    return 0


def _cmd_eval(args, parser):
    pano = sio.load_image(args.panorama)
    truth_path = Path(args.truth)
    elapsed = float("nan")
    if args.report:
        elapsed = sio.load_report(args.report).get("elapsed_ms", float("nan"))

    if truth_path.is_dir():
        if not args.report:
            parser.error("directory truth requires --report for frame alignment")
        report = sio.load_report(args.report)
        manifest, gt_pano, _, _, homographies = sio.read_truth(truth_path)
        from . import geometry

        cb = report["canvas"]
        bbox = geometry.BoundingBox(cb["x0"], cb["y0"], cb["x1"], cb["y1"])
        h_ref = homographies[report["reference"]]
        gt_on_canvas, gt_valid = geometry.warp_image(gt_pano, geometry.invert(h_ref), bbox)
        valid = gt_valid
        vpath = Path(args.panorama + ".valid.png")
        if vpath.exists():
            valid = gt_valid & (sio.load_image(vpath) > 0.5)
        report_row = MetricReport(
            ssim=ssim(pano, gt_on_canvas, valid=valid),
            psnr=psnr(pano, gt_on_canvas, valid=valid),
            elapsed_ms=elapsed,
        )
    else:
        gt = sio.load_image(truth_path)
        report_row = MetricReport(
            ssim=ssim(pano, gt), psnr=psnr(pano, gt), elapsed_ms=elapsed
        )
    print(report_row.row())
    return 0


def _parse_buckets(text):
    if not text:
        return dict(OVERLAP_BUCKETS)
    out = {}
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"bad bucket spec {item!r}; expected name=value")
        name, value = item.split("=", 1)
        out[name.strip()] = float(value)
    return out


def _cmd_sweep(args, parser):
    buckets = _parse_buckets(args.overlaps)
    resolutions = tuple(int(r) for r in args.resolutions.split(",") if r)
    if not buckets or not resolutions or args.seeds < 1:
        parser.error("sweep grid must be nonempty")
    rows = sweep(
        buckets=buckets,
        resolutions=resolutions,
        seeds=args.seeds,
        n_slices=args.slices,
        warp_kind=args.warp,
        noise_sigma=args.noise,
        jobs=args.jobs,
        base_seed=args.seed,
    )
    print(format_sweep_table(rows))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].as_dict().keys()))
            writer.writeheader()
            for row in rows:
                writer.writerow(row.as_dict())
    return 0


def _cmd_segment(args, parser):
    img = sio.load_image(args.image)
    min_area = args.min_area or scaled_min_area(img.shape[1])
    mask = fallback_segment(img, args.threshold, min_area)
    sio.save_mask(args.out, mask)
    print(f"mask={args.out} instances={int(mask.max())}", file=sys.stderr)
    return 0


_COMMANDS = {
    "stitch": _cmd_stitch,
    "synth": _cmd_synth,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "segment-fallback": _cmd_segment,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except RegistrationError as exc:
        pair = f" pair={exc.pair}" if exc.pair is not None else ""
        print(f"registration failed:{pair} {exc}", file=sys.stderr)
        return 2
    except (DisconnectedSet, AmbiguousOrientation) as exc:
        print(f"ordering failed: {exc}", file=sys.stderr)
        return 3
    except DegenerateConfiguration as exc:
        print(f"degenerate configuration: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 5
    except (TooManyImages, InfeasibleSpec, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StitchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
