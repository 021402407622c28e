"""Command line front end.

    polarpipe extract --in frame.pgm --channels rgb,pol --out out/
    polarpipe synth --scene scene.json --out raw.pgm --truth truth/
    polarpipe verify --truth truth/ --pred-dir out/ --stem raw
    polarpipe physics profile --height 0.75 --n2 1.33 --dmax 20
    polarpipe stats --coco labels.json --out stats.csv --plot stats.png
    polarpipe convert-labels --coco labels.json --to yolo --out yolo/
    polarpipe split --coco labels.json --train train.txt --val val.txt --test test.txt --out splits/
    polarpipe eval --gt labels.json --pred preds.json --out report.csv --plot pr.png
    polarpipe bench --frames 5

Every subcommand also accepts ``--config file.json`` whose keys mirror the
long flag names (``"channels": "rgb,pol"``); explicit flags win.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import dataset, evaluation, physics, render, synth
from .formats import read_pfm, write_pfm, write_ppm
from .mosaic import MosaicLayout, load_raw, save_raw
from .pipeline import PLANE_NAMES, extract_frame, parse_channels

log = logging.getLogger("polarpipe")

DEFAULT_BASELINE = Path(__file__).resolve().parents[2] / "benchmarks" / "baseline.json"


class CliError(Exception):
    pass


def _expand_inputs(patterns) -> list[Path]:
    paths = []
    for pat in patterns:
        hits = sorted(glob.glob(pat))
        if not hits:
            raise CliError(f"no input matches {pat!r}")
        paths.extend(Path(h) for h in hits)
    return paths


def _layout(text) -> MosaicLayout | None:
    if not text:
        return None
    try:
        return MosaicLayout.parse(text)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from None
    return out


# --- extract ---------------------------------------------------------------


def cmd_extract(args) -> int:
    try:
        channels = parse_channels(args.channels)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    out = _out_dir(args.out)
    layout = _layout(args.layout)
    for path in _expand_inputs(args.inputs):
        try:
            raw = load_raw(path, args.descriptor, layout)
        except (OSError, ValueError) as exc:
            raise CliError(f"{path}: {exc}") from None
        result = extract_frame(
            raw,
            channels,
            method=args.method,
            workers=args.workers,
            keep_planes=args.pfm,
            saturation_margin=args.saturation_margin,
        )
        for ch, img in result.images.items():
            write_ppm(out / f"{path.stem}_{ch}.ppm", img)
        if args.pfm:
            for name in PLANE_NAMES:
                write_pfm(out / f"{path.stem}_{name}.pfm", result.planes[name].astype(np.float32))
        print(f"{path.name}: wrote {', '.join(channels)} to {out}")
    return 0


# --- synth / verify --------------------------------------------------------


def cmd_synth(args) -> int:
    scene = synth.load_scene(args.scene)
    truth = synth.bake_truth(scene)
    layout = _layout(args.layout) or MosaicLayout()
    noise = args.noise if args.seed is not None else None
    if args.noise and args.seed is None:
        log.warning("--noise given without --seed: noise disabled")
    raw = synth.mosaicize(truth, layout, args.bit_depth, noise, args.seed)
    save_raw(raw, args.out)
    print(f"wrote {raw.width}x{raw.height} {raw.bit_depth}-bit raw to {args.out}")
    if args.truth:
        tdir = _out_dir(args.truth)
        synth.write_truth(truth, tdir)
        meta = {"bit_depth": args.bit_depth, "layout": layout.to_json(), "scene": scene.to_json()}
        (tdir / "meta.json").write_text(json.dumps(meta, indent=1))
        print(f"wrote truth planes to {tdir}")
    return 0


def verify_planes(truth, dolp, aolp, valid, margin=4, min_dolp=0.05):
    """Worst-case DoLP and AoLP errors over interior, unsaturated pixels."""
    interior = synth.interior_mask(truth.labels, margin) & valid
    if not interior.any():
        raise CliError("no interior pixels to verify")
    d_err = np.abs(dolp - truth.dolp)[interior]
    polarized = interior & (truth.dolp >= min_dolp)
    if polarized.any():
        diff = np.abs(aolp - truth.aolp)[polarized] % 180.0
        a_err = np.minimum(diff, 180.0 - diff)
        max_a = float(a_err.max())
    else:
        max_a = 0.0
    return float(d_err.max()), max_a, int(interior.sum())


def cmd_verify(args) -> int:
    tdir = Path(args.truth)
    truth = synth.read_truth(tdir)
    meta_path = tdir / "meta.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    bit_depth = meta.get("bit_depth", 16)
    if args.raw:
        raw = load_raw(args.raw, layout=_layout(args.layout))
        bit_depth = raw.bit_depth
        planes = extract_frame(raw, ("mono",), method=args.method, keep_planes=True).planes
        dolp, aolp, valid = planes["dolp"], planes["aolp"], planes["valid"]
    elif args.pred_dir:
        pdir = Path(args.pred_dir)
        stem = args.stem
        if stem is None:
            hits = sorted(pdir.glob("*_dolp.pfm"))
            if len(hits) != 1:
                raise CliError("cannot infer --stem; pass it explicitly")
            stem = hits[0].name[: -len("_dolp.pfm")]
        try:
            dolp = read_pfm(pdir / f"{stem}_dolp.pfm")
            aolp = read_pfm(pdir / f"{stem}_aolp.pfm")
            valid = read_pfm(pdir / f"{stem}_valid.pfm") > 0.5
        except OSError as exc:
            raise CliError(f"missing extracted planes (run extract with --pfm): {exc}") from None
    else:
        raise CliError("verify needs --raw or --pred-dir")
    if dolp.shape != truth.shape:
        raise CliError(f"shape mismatch: extracted {dolp.shape}, truth {truth.shape}")

    tol_d = args.tol_dolp if args.tol_dolp is not None else 2.0 / (1 << bit_depth)
    max_d, max_a, n = verify_planes(truth, dolp, aolp, valid, args.margin, args.min_dolp)
    ok_d, ok_a = max_d <= tol_d, max_a <= args.tol_aolp
    print(f"interior pixels:  {n}")
    print(f"max DoLP error:   {max_d:.3e}  (tol {tol_d:.3e})  {'PASS' if ok_d else 'FAIL'}")
    print(f"max AoLP error:   {max_a:.3e} deg  (tol {args.tol_aolp:g})  {'PASS' if ok_a else 'FAIL'}")
    return 0 if ok_d and ok_a else 1


# --- labels ----------------------------------------------------------------


def _load_labels(args) -> dataset.AnnotationSet:
    if getattr(args, "coco", None):
        return dataset.parse_coco(args.coco)
    if getattr(args, "yolo", None):
        if not args.sizes:
            raise CliError("--yolo needs --sizes name,width,height CSV")
        return dataset.parse_yolo(args.yolo, args.sizes)
    raise CliError("give --coco FILE or --yolo DIR --sizes CSV")


def cmd_stats(args) -> int:
    from .report import plot_box_stats

    aset = _load_labels(args)
    stats = dataset.box_stats(aset, bins=args.bins)
    print(f"annotations: {stats.count} on {len(aset.images)} images")
    for k, v in stats.bucket_counts.items():
        print(f"  {k:<7} {v}")
    print(f"  area < {dataset.TINY_SIDE}^2: {stats.tiny_count}")
    print(f"  pearson r(area, y_center): {stats.pearson_r:.4f}")
    if args.out:
        dataset.write_stats_csv(stats, args.out)
    if args.plot:
        plot_box_stats(stats, args.plot)
    return 0


def cmd_convert(args) -> int:
    aset = _load_labels(args)
    if args.to == "yolo":
        _out_dir(args.out)
    dataset.convert(aset, args.to, args.out)
    print(f"wrote {len(aset.images)} images / {len(aset.annotations)} boxes as {args.to} to {args.out}")
    return 0


def cmd_split(args) -> int:
    aset = _load_labels(args)
    lists = dataset.SplitLists.from_files(args.train, args.val, args.test)
    parts = dataset.apply_split(aset, lists)
    out = _out_dir(args.out) if args.out else None
    for name, part in parts.items():
        print(f"{name:<5} {len(part.images):6d} images {len(part.annotations):7d} boxes")
        if out is not None:
            dataset.write_coco(part, out / f"{name}.json")
    return 0


# --- eval ------------------------------------------------------------------


def cmd_eval(args) -> int:
    gt = dataset.parse_coco(args.gt)
    dets = evaluation.load_detections(args.pred)
    report = evaluation.coco_summary(gt, dets)
    label = args.label or Path(args.pred).stem
    print(evaluation.format_table(report, label))
    if args.out:
        evaluation.write_report_csv(report, args.out, label)
    thresholds = [float(t) for t in args.iou.split(",")]
    curves = [evaluation.pr_curve(gt, dets, t) for t in thresholds]
    if args.pr_csv:
        evaluation.write_pr_csv(curves, args.pr_csv)
    if args.plot:
        from .report import plot_pr_curves

        plot_pr_curves(curves, args.plot, title=label)
    return 0


# --- physics ---------------------------------------------------------------


def cmd_physics(args) -> int:
    iface = physics.InterfaceSpec(args.n1, args.n2)
    if args.what == "brewster":
        print(f"{physics.brewster_angle(iface):.4f}")
        return 0
    if args.what == "rayleigh":
        rows = [(a, physics.rayleigh_dolp(a, args.dmax_dolp)) for a in np.arange(0, 181, args.angle_step)]
        out = open(args.out, "w") if args.out else sys.stdout
        out.write("scatter_angle_deg,dolp\n")
        for a, d in rows:
            out.write(f"{a:g},{d:.6f}\n")
        if args.out:
            out.close()
        return 0
    geom = physics.CameraGeometry(args.height)
    grid = physics.distance_grid(args.dmin, args.dmax, args.step)
    rows = physics.dolp_distance_profile(geom, iface, grid)
    out = open(args.out, "w") if args.out else sys.stdout
    out.write("d,theta_i_deg,dolp\n")
    for d, t, p in rows:
        out.write(f"{d:.4f},{t:.4f},{p:.6f}\n")
    if args.out:
        out.close()
    if args.plot:
        from .report import plot_dolp_profile

        plot_dolp_profile(rows, args.plot, args.height, physics.peak_distance(geom, iface))
    return 0


# --- bench -----------------------------------------------------------------


def bench_frame(bit_depth: int = 8, seed: int = 0):
    """A deterministic full-sensor frame with a few polarized regions."""
    scene = synth.SceneSpec(
        1224,
        1024,
        synth.RegionSpec((0.30, 0.35, 0.40), 0.25, 95.0),
        (
            synth.RegionSpec((0.45, 0.20, 0.10), 0.8, 10.0, (100, 600, 300, 200)),
            synth.RegionSpec((0.10, 0.40, 0.15), 0.0, 0.0, (600, 200, 200, 500)),
            synth.RegionSpec((0.50, 0.50, 0.50), 1.0, 45.0, (900, 50, 250, 250)),
        ),
    )
    return synth.mosaicize(synth.bake_truth(scene), bit_depth=bit_depth, noise_sigma=0.01, seed=seed)


def cmd_bench(args) -> int:
    raw = bench_frame()
    extract_frame(raw, render.MODALITIES, workers=args.workers)  # warm-up
    t0 = time.perf_counter()
    for _ in range(args.frames):
        extract_frame(raw, render.MODALITIES, workers=args.workers)
    elapsed = time.perf_counter() - t0
    fps = args.frames / elapsed
    print(f"frames: {args.frames}  workers: {args.workers}  {elapsed:.3f} s  {fps:.2f} frames/s")
    baseline_path = Path(args.baseline) if args.baseline else DEFAULT_BASELINE
    if args.record:
        baseline_path.parent.mkdir(parents=True, exist_ok=True)
        baseline_path.write_text(json.dumps({"fps": round(fps, 3), "workers": args.workers}, indent=1) + "\n")
        print(f"recorded baseline {fps:.2f} frames/s in {baseline_path}")
        return 0
    if baseline_path.exists():
        base = json.loads(baseline_path.read_text())["fps"]
        floor = base * (1.0 - args.tolerance)
        status = "PASS" if fps >= floor else "FAIL"
        print(f"baseline {base:.2f} frames/s, gate {floor:.2f} frames/s: {status}")
        if fps < floor:
            return 1
    return 0


# --- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarpipe", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="JSON file whose keys mirror the long flags")
        p.set_defaults(func=func)
        return p

    p = add("extract", cmd_extract, "raw frames to the six visualizations")
    p.add_argument("--in", dest="inputs", nargs="+", required=True, help="raw files or globs")
    p.add_argument("--out", required=True)
    p.add_argument("--channels", default=",".join(render.MODALITIES))
    p.add_argument("--layout", help="angles at offsets 00,01,10,11, e.g. 90,45,135,0")
    p.add_argument("--descriptor", help="JSON descriptor for headerless .raw input")
    p.add_argument("--debayer", "--method", dest="method", choices=("bilinear", "nearest"), default="bilinear")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--pfm", action="store_true", help="also write float planes as PFM")
    p.add_argument("--saturation-margin", type=int, default=0)

    p = add("synth", cmd_synth, "render a synthetic raw frame from a scene description")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="directory for ground-truth PFM planes")
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=16)
    p.add_argument("--layout")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian sigma, fraction of full scale")
    p.add_argument("--seed", type=int, help="required for noise; no seed means no noise")

    p = add("verify", cmd_verify, "compare extracted DoLP/AoLP with synthetic truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--raw")
    p.add_argument("--pred-dir")
    p.add_argument("--stem")
    p.add_argument("--layout")
    p.add_argument("--debayer", "--method", dest="method", choices=("bilinear", "nearest"), default="bilinear")
    p.add_argument("--tol-dolp", type=float)
    p.add_argument("--tol-aolp", type=float, default=0.5)
    p.add_argument("--min-dolp", type=float, default=0.05)
    p.add_argument("--margin", type=int, default=4)

    def label_inputs(p):
        p.add_argument("--coco")
        p.add_argument("--yolo")
        p.add_argument("--sizes", help="name,width,height CSV for YOLO labels")

    p = add("stats", cmd_stats, "bounding-box statistics")
    label_inputs(p)
    p.add_argument("--out", help="stats CSV")
    p.add_argument("--plot", help="figure path (png/pdf)")
    p.add_argument("--bins", type=int, default=20)

    p = add("convert-labels", cmd_convert, "convert between COCO and YOLO labels")
    label_inputs(p)
    p.add_argument("--to", choices=("coco", "yolo"), required=True)
    p.add_argument("--out", required=True)

    p = add("split", cmd_split, "partition labels with train/val/test name lists")
    label_inputs(p)
    p.add_argument("--train")
    p.add_argument("--val")
    p.add_argument("--test")
    p.add_argument("--out", help="directory for train/val/test COCO files")

    p = add("eval", cmd_eval, "COCO-style detection metrics")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--label")
    p.add_argument("--out", help="metrics CSV")
    p.add_argument("--pr-csv", help="precision-recall CSV")
    p.add_argument("--plot", help="precision-recall figure")
    p.add_argument("--iou", default="0.5,0.75,0.9", help="PR-curve IoU thresholds")

    p = add("physics", cmd_physics, "reflection and skylight polarization models")
    p.add_argument("what", choices=("brewster", "profile", "rayleigh"))
    p.add_argument("--n1", type=float, default=physics.N_AIR)
    p.add_argument("--n2", type=float, default=physics.N_WATER)
    p.add_argument("--height", type=float, default=0.75)
    p.add_argument("--dmin", type=float, default=0.2)
    p.add_argument("--dmax", type=float, default=20.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--dmax-dolp", type=float, default=1.0, help="Rayleigh peak DoLP")
    p.add_argument("--angle-step", type=float, default=5.0)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--plot", help="figure path")

    p = add("bench", cmd_bench, "six-channel extraction throughput on a 2448x2048 frame")
    p.add_argument("--frames", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--baseline")
    p.add_argument("--tolerance", type=float, default=0.5, help="allowed fractional slowdown")
    p.add_argument("--record", action="store_true", help="store this run as the baseline")
    return parser


def _apply_config(parser, argv):
    """Parse ``argv`` with defaults taken from ``--config`` when present."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in choices), None)
    if not known.config or command is None:
        return parser.parse_args(argv)
    try:
        with open(known.config) as f:
            cfg = json.load(f)
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    subparser = choices[command]
    dests = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            dests[opt.lstrip("-")] = action.dest
    unknown = []
    defaults = {}
    for key, val in cfg.items():
        dest = dests.get(key) or dests.get(key.replace("_", "-"))
        if dest is None or key == "config":
            unknown.append(key)
            continue
        if dest == "channels" and isinstance(val, list):
            val = ",".join(val)
        if dest == "inputs" and isinstance(val, str):
            val = [val]
        defaults[dest] = val
    if unknown:
        parser.error(f"unknown config key(s): {', '.join(unknown)}")
    for action in subparser._actions:
        if action.dest in defaults:
            action.required = False
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (CliError, dataset.LabelError, ValueError, OSError) as exc:
        print(f"polarpipe {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
