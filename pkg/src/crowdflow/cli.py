"""Command-line entry point: ``crowdflow <subcommand> ...``.

Data goes to files; diagnostics go to stderr. Exit status is 0 on success,
1 on a runtime error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

from crowdflow import io
from crowdflow.core import CentroidSet, FrameDims
from crowdflow.density import DensityConfig
from crowdflow.extraction import Connectivity, ExtractionConfig, extract_centroids
from crowdflow.flow import MATCH_METHODS, MatchConfig, detect_flow
from crowdflow.meanshift import MeanShiftConfig
from crowdflow.metrics import MpprConfig
from crowdflow.pipeline import evaluate_sequence, frame_centroids, generate_ground_truth
from crowdflow.render import render_flow, render_heatmap
from crowdflow.synthetic import generate_sequence, load_scene

log = logging.getLogger("crowdflow")

CENTROIDS_CSV = "centroids.csv"
CENTROID_MAP_DIR = "centroid_maps"
CROWD_MAP_DIR = "crowd_maps"
DEFAULT_TAU = 1.0 / 3.0


class CliError(Exception):
    pass


def fraction(text: str) -> float:
    """Parse '0.333' or '1/3'."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}") from None


def _dims(args) -> FrameDims:
    return FrameDims(args.width, args.height)


def _add_dims(p: argparse.ArgumentParser) -> None:
    p.add_argument("--width", type=int, default=640, help="frame width in pixels (default 640)")
    p.add_argument("--height", type=int, default=512, help="frame height in pixels (default 512)")


def _add_extraction(p: argparse.ArgumentParser, tau_required: bool = False) -> None:
    if tau_required:
        p.add_argument("--tau", type=fraction, required=True, help="background threshold in [0, 1]")
    else:
        p.add_argument("--tau", type=fraction, default=DEFAULT_TAU, help="background threshold (default 1/3)")
    p.add_argument("--min-area", type=int, default=4, help="smallest kept blob, in pixels")
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)


def _extraction_config(args) -> ExtractionConfig:
    return ExtractionConfig(args.tau, args.min_area, Connectivity(args.connectivity))


def _meanshift_config(args) -> MeanShiftConfig:
    return MeanShiftConfig(bandwidth=args.bandwidth, quantile=args.quantile)


# -- subcommands -----------------------------------------------------------


def cmd_gt_gen(args) -> None:
    frames = io.parse_annotations(args.annotations, _dims(args), clip=args.clip)
    gt = generate_ground_truth(
        frames, DensityConfig(args.sigma, args.truncate), _meanshift_config(args)
    )
    out = Path(args.out_dir)
    (out / CENTROID_MAP_DIR).mkdir(parents=True, exist_ok=True)
    (out / CROWD_MAP_DIR).mkdir(parents=True, exist_ok=True)
    io.write_centroids([g.centroids for g in gt], out / CENTROIDS_CSV)
    for g in gt:
        io.write_density_map(g.centroid_map, out / CENTROID_MAP_DIR / io.map_filename(g.frame_id))
        io.write_density_map(g.crowd_map, out / CROWD_MAP_DIR / io.map_filename(g.frame_id))
    log.info("ground truth for %d frames written to %s", len(gt), out)


def cmd_cluster(args) -> None:
    frames = io.parse_annotations(args.annotations, _dims(args), clip=args.clip)
    config = _meanshift_config(args)
    io.write_centroids([frame_centroids(f, config) for f in frames], args.out)


def cmd_extract(args) -> None:
    dmap = io.read_density_map(args.map)
    frame = args.frame if args.frame is not None else io.frame_id_from_path(args.map, default=0)
    cents = extract_centroids(dmap, _extraction_config(args), frame)
    io.write_centroids([cents], args.out)


def _flow_pair(path0, pathk, t0, tk, args) -> io.FlowReport:
    m0, mk = io.read_density_map(path0), io.read_density_map(pathk)
    ex, mc = _extraction_config(args), MatchConfig(args.stationary_eps, args.method)
    start = time.perf_counter()
    result = detect_flow(m0, mk, ex, mc, t0, tk)
    elapsed = 0.0 if args.no_timing else (time.perf_counter() - start) * 1000.0
    metadata = {
        "width": m0.dims.width,
        "height": m0.dims.height,
        "tau": ex.tau,
        "min_area": ex.min_area,
        "connectivity": ex.connectivity.value,
        "stationary_eps": mc.stationary_eps,
        "method": mc.method,
    }
    return io.FlowReport(result, elapsed, metadata)


def cmd_flow(args) -> None:
    if args.map_dir is not None:
        if args.map0 or args.mapk:
            raise CliError("--map-dir cannot be combined with --map0/--mapk")
        if args.stride < 1:
            raise CliError("--stride must be at least 1")
        entries = dict(io.list_map_dir(args.map_dir))
        reports = [
            _flow_pair(entries[t], entries[t + args.stride], t, t + args.stride, args)
            for t in sorted(entries)
            if t + args.stride in entries
        ]
    else:
        if not (args.map0 and args.mapk):
            raise CliError("flow needs --map0 and --mapk, or --map-dir")
        t0 = io.frame_id_from_path(args.map0, default=0)
        tk = io.frame_id_from_path(args.mapk, default=t0 + 1)
        reports = [_flow_pair(args.map0, args.mapk, t0, tk, args)]
    io.write_flow_report(reports, args.out)


def _load_centroid_source(directory: Path, ex: ExtractionConfig) -> tuple[dict[int, CentroidSet], bool, FrameDims | None]:
    """Centroids per frame for ``eval``.

    Looked up in order: ``centroids.csv``, ``*.cdm`` maps (extracted with
    ``ex``), a ``centroid_maps/`` subdirectory, then any ``*.csv`` files.
    Returns (frames, complete, dims). A CSV source is incomplete: frames with
    no centroids have no rows.
    """
    if not directory.is_dir():
        raise CliError(f"{directory}: not a directory")
    csv_path = directory / CENTROIDS_CSV
    if csv_path.is_file():
        return {s.frame_id: s for s in io.read_centroids(csv_path)}, False, None
    entries = io.list_map_dir(directory)
    if not entries and (directory / CENTROID_MAP_DIR).is_dir():
        entries = io.list_map_dir(directory / CENTROID_MAP_DIR)
    if not entries:
        csvs = sorted(directory.glob("*.csv"))
        if not csvs:
            raise CliError(f"{directory}: no {CENTROIDS_CSV}, .cdm maps or centroid CSVs")
        merged: dict[int, CentroidSet] = {}
        for path in csvs:
            for s in io.read_centroids(path):
                if s.frame_id in merged:
                    raise CliError(f"{path}: frame {s.frame_id} also appears in another CSV")
                merged[s.frame_id] = s
        return merged, False, None
    frames, dims = {}, None
    for frame_id, path in entries:
        dmap = io.read_density_map(path)
        if dims is not None and dmap.dims != dims:
            raise CliError(f"{path}: dimensions differ from other maps in {directory}")
        dims = dmap.dims
        frames[frame_id] = extract_centroids(dmap, ex, frame_id)
    return frames, True, dims


def cmd_eval(args) -> None:
    ex = _extraction_config(args)
    pred, pred_complete, pred_dims = _load_centroid_source(Path(args.pred_dir), ex)
    gt, gt_complete, gt_dims = _load_centroid_source(Path(args.gt_dir), ex)
    if pred_dims and gt_dims and pred_dims != gt_dims:
        raise CliError("predicted and ground-truth maps have different dimensions")
    dims = pred_dims or gt_dims or _dims(args)

    frame_ids = sorted(set(pred) | set(gt))
    if not frame_ids:
        raise CliError("no frames to evaluate")
    for ids, complete, name in ((pred, pred_complete, "pred"), (gt, gt_complete, "gt")):
        missing = [f for f in frame_ids if f not in ids]
        if complete and missing:
            raise CliError(f"{name} directory lacks frames {missing[:5]}")
    preds = [pred.get(f, CentroidSet(f)) for f in frame_ids]
    gts = [gt.get(f, CentroidSet(f)) for f in frame_ids]

    config = MpprConfig(args.np, args.patch, args.patch if args.patch_h is None else args.patch_h, args.seed)
    records, summary = evaluate_sequence(preds, gts, dims, config)
    summary["tau"] = ex.tau
    io.write_jsonl(records + [summary], args.out)
    log.info(
        "normalized MCME %s, precision %s, recall %s",
        summary["normalized_mcme"], summary["precision"], summary["recall"],
    )


def cmd_synth(args) -> None:
    spec = load_scene(args.scene)
    annotations, truths = generate_sequence(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_annotations(annotations, out / "annotations.csv")
    io.write_centroids(truths, out / "truth_centers.csv")
    log.info("%d frames written to %s", len(annotations), out)


def cmd_render(args) -> None:
    if (args.map is None) == (args.report is None):
        raise CliError("render needs exactly one of --map or --report")
    if args.map is not None:
        render_heatmap(io.read_density_map(args.map), args.out, underlay=args.underlay, alpha=args.alpha)
        return
    reports = io.read_flow_report(args.report)
    if not reports:
        raise CliError(f"{args.report}: empty report")
    if not 0 <= args.pair < len(reports):
        raise CliError(f"--pair {args.pair} out of range for {len(reports)} frame pairs")
    rep = reports[args.pair]
    meta = rep.metadata
    dims = FrameDims(meta.get("width", args.width), meta.get("height", args.height))
    render_flow(rep, dims, args.out)


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdflow", description="Crowd centroid flow toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gt-gen", help="Mean Shift centroids plus centroid and crowd density maps")
    p.add_argument("--annotations", required=True, help="head annotation CSV (frame,x,y)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sigma", type=float, default=10.0)
    p.add_argument("--truncate", type=float, default=4.0, help="kernel radius in multiples of sigma")
    p.add_argument("--quantile", type=float, default=0.3)
    p.add_argument("--bandwidth", type=float, default=None, help="fixed Mean Shift bandwidth")
    p.add_argument("--clip", action="store_true", help="drop out-of-frame annotations instead of failing")
    _add_dims(p)
    p.set_defaults(func=cmd_gt_gen)

    p = sub.add_parser("cluster", help="Mean Shift centroids only")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quantile", type=float, default=0.3)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--clip", action="store_true")
    _add_dims(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("extract", help="centroids from one density map")
    p.add_argument("--map", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame", type=int, default=None, help="frame id (default: from the file name)")
    _add_extraction(p, tau_required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("flow", help="match centroids between map pairs")
    p.add_argument("--map0")
    p.add_argument("--mapk")
    p.add_argument("--map-dir", help="directory of frame_NNNNNN.cdm maps; pairs t with t+stride")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--stationary-eps", type=float, default=5.0)
    p.add_argument("--method", choices=MATCH_METHODS, default="greedy")
    p.add_argument("--no-timing", action="store_true", help="write elapsed_ms as 0 for reproducible output")
    _add_extraction(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("eval", help="MCME and MPPR of predictions against ground truth")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--np", type=int, default=1000, help="patches sampled per frame")
    p.add_argument("--patch", type=int, default=150, help="patch width (and height unless --patch-h)")
    p.add_argument("--patch-h", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    _add_extraction(p)
    _add_dims(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic annotated sequence")
    p.add_argument("--scene", required=True, help="JSON scene file")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", help="PNG of a density map or a flow report")
    p.add_argument("--map")
    p.add_argument("--underlay", help="image to blend the heatmap over")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--report")
    p.add_argument("--pair", type=int, default=0, help="which frame pair of the report to draw")
    p.add_argument("--out", required=True)
    _add_dims(p)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"crowdflow {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
