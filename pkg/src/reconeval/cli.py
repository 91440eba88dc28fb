"""Command-line front end.

Every subcommand writes a JSON (or CSV) report with a complete parameter
echo, so a report can be reproduced by re-running the printed command. All
diagnostics go to stderr; the report is the only thing written to the
output stream. Exit code 0 means the report was fully produced. The
RECONEVAL_THREADS environment variable bounds the worker count of
nearest-neighbor queries (results do not depend on it).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from contextlib import contextmanager

from . import __version__
from .alignment import IcpConfig
from .errors import ParseError
from .geometry_metrics import evaluate_cloud_pair, mesh_stats
from .io import (
    parse_colmap_text,
    parse_exposure_csv,
    parse_groundtruth_tf,
    parse_trajectory,
    read_ply,
    read_png,
    write_png,
)
from .geometry import PointCloud, TriangleMesh
from .radiometry import (
    Image8,
    clahe,
    crop,
    delta_e_stats,
    exposure_normalize,
    psnr,
    ssim,
    white_balance_grayworld,
)
from .selection import CandidateImage, find_weak_voxels, greedy_select
from .trajectory_metrics import ate, default_max_dt, rpe

_M_TO_CM = 100.0


class CliError(Exception):
    """Failure with the pipeline stage already named in the message."""


@contextmanager
def _stage(name: str):
    try:
        yield
    except CliError:
        raise
    except Exception as exc:
        raise CliError(f"{name}: {exc}") from exc


def _load_cloud(path) -> PointCloud:
    geom = read_ply(path)
    if isinstance(geom, TriangleMesh):
        return PointCloud(geom.vertices)
    return geom


def _load_mesh(path) -> TriangleMesh:
    geom = read_ply(path)
    if not isinstance(geom, TriangleMesh):
        raise ParseError(f"{path}: expected a mesh, got a point cloud")
    return geom


# ---------------------------------------------------------------------------
# report plumbing


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if hasattr(value, "item"):  # numpy scalar
        return _jsonable(value.item())
    return value


def _flatten(value, prefix: str, out: dict):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(v, f"{prefix}.{k}" if prefix else str(k), out)
    elif isinstance(value, (list, tuple)):
        pass  # sequences are JSON-only
    else:
        out[prefix] = value


def _emit_report(args, command: str, parameters: dict, metrics: dict, started: float) -> None:
    report = {
        "tool": "reconeval",
        "version": __version__,
        "command": command,
        "parameters": _jsonable(parameters),
        "metrics": _jsonable(metrics),
        "timing_s": round(time.monotonic() - started, 6),
    }
    if args.format == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    else:
        flat: dict = {}
        _flatten(report["metrics"], "", flat)
        keys = sorted(flat)
        text = ",".join(keys) + "\n" + ",".join(str(flat[k]) for k in keys) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_eval_traj(args):
    with _stage("parse-est"):
        est = parse_trajectory(args.est, quaternion_order=args.quat_order)
    with _stage("parse-gt"):
        gt = parse_groundtruth_tf(args.gt, quaternion_order=args.quat_order)
    with _stage("associate"):
        max_dt = args.max_dt if args.max_dt is not None else default_max_dt(gt)
    with _stage("ate"):
        ate_res = ate(est, gt, mode=args.mode, max_dt=max_dt)
    with _stage("rpe"):
        rpe_res = rpe(est, gt, delta=args.delta, max_dt=max_dt)
    if args.per_frame_csv is not None:
        with _stage("per-frame-csv"), open(args.per_frame_csv, "w", encoding="utf-8") as fh:
            fh.write("est_index,gt_index,t_est,t_gt,ate_error_cm\n")
            for (i, j), err in zip(ate_res.pairs, ate_res.per_frame_errors):
                fh.write(
                    f"{i},{j},{est.times[i]:.9f},{gt.times[j]:.9f},{err * _M_TO_CM:.9f}\n"
                )
    metrics = {
        "ate": {
            "rmse_cm": ate_res.rmse * _M_TO_CM,
            "mean_cm": ate_res.mean * _M_TO_CM,
            "median_cm": ate_res.median * _M_TO_CM,
            "max_cm": ate_res.max * _M_TO_CM,
            "pairs": int(ate_res.pairs.shape[0]),
            "alignment_scale": ate_res.alignment.scale,
        },
        "rpe": {
            "mean_trans_cm": rpe_res.mean_trans * _M_TO_CM,
            "mean_rot_deg": math.degrees(rpe_res.mean_rot),
            "delta": rpe_res.delta,
        },
    }
    parameters = {
        "est": args.est,
        "gt": args.gt,
        "mode": args.mode,
        "delta": args.delta,
        "max_dt": max_dt,
        "quat_order": args.quat_order,
    }
    return parameters, metrics


def _cmd_eval_geom(args):
    with _stage("load-cloud"):
        cloud = _load_cloud(args.cloud)
    with _stage("load-reference"):
        reference = _load_cloud(args.reference)
    with _stage("evaluate"):
        config = IcpConfig(
            max_correspondence_dist=args.icp_max_corr_dist,
            max_iterations=args.icp_max_iter,
            convergence_eps=args.icp_eps,
        )
        result = evaluate_cloud_pair(cloud, reference, k=args.k, icp_config=config)
    metrics = {
        "scale_rms": result.scale_rms,
        "icp_fitness": result.icp_fitness,
        "chamfer_rms_mm": result.chamfer_rms_mm,
        "surface_roughness": result.surface_roughness,
        "mean_nn_distance_mm": result.mean_nn_distance_mm,
        "icp_inlier_rmse_mm": result.icp.inlier_rmse * 1000.0,
        "icp_iterations": result.icp.iterations,
    }
    parameters = {
        "cloud": args.cloud,
        "reference": args.reference,
        "k": args.k,
        "icp_max_corr_dist": args.icp_max_corr_dist,
        "icp_max_iter": args.icp_max_iter,
        "icp_eps": args.icp_eps,
    }
    return parameters, metrics


def _cmd_eval_mesh(args):
    with _stage("load-mesh"):
        mesh = _load_mesh(args.mesh)
    with _stage("mesh-stats"):
        stats = mesh_stats(mesh, unit_scale_to_cm=args.unit_scale)
    metrics = {
        "triangles": stats.triangles,
        "surface_area_cm2": stats.surface_area_cm2,
        "avg_curvature_per_cm": stats.avg_curvature_per_cm,
        "degenerate_triangles": stats.degenerate_triangles,
    }
    return {"mesh": args.mesh, "unit_scale": args.unit_scale}, metrics


def _cmd_select_views(args):
    with _stage("load-cloud"):
        cloud = _load_cloud(args.cloud)
    with _stage("load-cameras"):
        model = parse_colmap_text(args.cameras)
        candidates = [
            CandidateImage(image.name, model.pinhole_camera(image_id))
            for image_id, image in sorted(model.images.items())
        ]
    with _stage("find-weak-voxels"):
        weak = find_weak_voxels(cloud, voxel_size=args.voxel_size, threshold=args.threshold)
    with _stage("greedy-select"):
        result = greedy_select(
            candidates,
            weak,
            budget=args.budget,
            min_depth=args.min_depth,
            max_depth=args.max_depth,
        )
    if args.image_list is not None:
        with _stage("write-image-list"), open(args.image_list, "w", encoding="utf-8") as fh:
            for name in result.selected:
                fh.write(name + "\n")
    metrics = {
        "selected": list(result.selected),
        "marginal_gains": list(result.marginal_gains),
        "covered": result.covered,
        "total_weak": result.total_weak,
        "coverage": result.covered / result.total_weak if result.total_weak else 0.0,
        "coverage_curve": list(result.coverage_curve),
        "n_selected": len(result.selected),
        "n_candidates": len(candidates),
    }
    parameters = {
        "cloud": args.cloud,
        "cameras": args.cameras,
        "voxel_size": args.voxel_size,
        "threshold": args.threshold,
        "budget": args.budget,
        "min_depth": args.min_depth,
        "max_depth": args.max_depth,
    }
    return parameters, metrics


def _paired_images(images_dir, reference_dir):
    with _stage("pair-images"):
        names = sorted(n for n in os.listdir(images_dir) if n.lower().endswith(".png"))
        if not names:
            raise CliError(f"pair-images: no PNG files in {images_dir}")
        for name in names:
            ref_path = os.path.join(reference_dir, name)
            if not os.path.isfile(ref_path):
                raise CliError(f"pair-images: {name} has no counterpart in {reference_dir}")
    for name in names:
        with _stage(f"load-pair ({name})"):
            img = read_png(os.path.join(images_dir, name))
            ref = read_png(os.path.join(reference_dir, name))
        yield name, img, ref


def _cmd_eval_color(args):
    mask = None
    if args.mask is not None:
        with _stage("load-mask"):
            mask = read_png(args.mask)
    per_pair = {}
    for name, img, ref in _paired_images(args.images, args.reference):
        with _stage(f"delta-e ({name})"):
            stats = delta_e_stats(img, ref, mask)
        per_pair[name] = {
            "delta_e_mean": stats.mean,
            "delta_e_std": stats.std,
            "delta_e_min": stats.min,
            "delta_e_max": stats.max,
            "l_diff": stats.mean_l_diff,
            "a_diff": stats.mean_a_diff,
            "b_diff": stats.mean_b_diff,
        }
    keys = next(iter(per_pair.values())).keys()
    aggregate = {k: sum(p[k] for p in per_pair.values()) / len(per_pair) for k in keys}
    metrics = {"aggregate": aggregate, "pairs": per_pair, "n_pairs": len(per_pair)}
    parameters = {"images": args.images, "reference": args.reference, "mask": args.mask}
    return parameters, metrics


def _cmd_eval_render(args):
    per_pair = {}
    for name, img, ref in _paired_images(args.images, args.reference):
        with _stage(f"metrics ({name})"):
            per_pair[name] = {"psnr_db": psnr(img, ref), "ssim": ssim(img, ref)}
    n = len(per_pair)
    aggregate = {
        "psnr_db": sum(p["psnr_db"] for p in per_pair.values()) / n,
        "ssim": sum(p["ssim"] for p in per_pair.values()) / n,
    }
    metrics = {"aggregate": aggregate, "pairs": per_pair, "n_pairs": n}
    parameters = {"images": args.images, "reference": args.reference}
    return parameters, metrics


_PREPROCESS_OPS = ("crop", "clahe", "white-balance", "exposure")


def _cmd_preprocess(args):
    ops = [op.strip() for op in args.ops.split(",") if op.strip()]
    for op in ops:
        if op not in _PREPROCESS_OPS:
            raise CliError(f"parse-ops: unknown operation '{op}' (choose from {_PREPROCESS_OPS})")
    if not ops:
        raise CliError("parse-ops: no operations given")
    rect = None
    if "crop" in ops:
        if args.crop is None:
            raise CliError("parse-ops: crop requested but --crop x,y,w,h missing")
        rect = tuple(int(v) for v in args.crop.split(","))
        if len(rect) != 4:
            raise CliError("parse-ops: --crop expects x,y,w,h")
    tiles = tuple(int(v) for v in args.clahe_tiles.split(","))
    if len(tiles) != 2:
        raise CliError("parse-ops: --clahe-tiles expects tx,ty")
    exposures = {}
    if "exposure" in ops:
        if args.exposure_csv is None or args.reference_exposure is None:
            raise CliError(
                "parse-ops: exposure normalization needs --exposure-csv and --reference-exposure"
            )
        with _stage("parse-exposure-csv"):
            exposures = {rec.name: rec.exposure for rec in parse_exposure_csv(args.exposure_csv)}

    with _stage("scan-input"):
        names = sorted(n for n in os.listdir(args.input) if n.lower().endswith(".png"))
        if not names:
            raise CliError(f"scan-input: no PNG files in {args.input}")
    os.makedirs(args.output, exist_ok=True)
    for name in names:
        with _stage(f"preprocess ({name})"):
            img = read_png(os.path.join(args.input, name))
            for op in ops:
                if op == "crop":
                    img = crop(img, rect)
                elif op == "clahe":
                    clip = math.inf if args.clahe_clip == 0 else args.clahe_clip
                    img = clahe(img, clip_limit=clip, tiles=tiles)
                elif op == "white-balance":
                    img = white_balance_grayworld(img)
                else:
                    if name not in exposures:
                        raise CliError(f"preprocess ({name}): no exposure record for this image")
                    img = exposure_normalize(img, exposures[name], args.reference_exposure)
            write_png(img, os.path.join(args.output, name))
    metrics = {"images_written": len(names), "operations": list(ops)}
    parameters = {
        "input": args.input,
        "output": args.output,
        "ops": args.ops,
        "crop": args.crop,
        "clahe_clip": args.clahe_clip,
        "clahe_tiles": args.clahe_tiles,
        "exposure_csv": args.exposure_csv,
        "reference_exposure": args.reference_exposure,
    }
    return parameters, metrics


# ---------------------------------------------------------------------------
# parser


def _add_output_flags(sub):
    sub.add_argument("--out", default=None, help="report path (default: stdout)")
    sub.add_argument("--format", choices=("json", "csv"), default="json")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reconeval",
        description="Evaluate 3D reconstructions: trajectories, geometry, color, view selection.",
    )
    parser.add_argument("--version", action="version", version=f"reconeval {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("eval-traj", help="trajectory ATE/RPE against ground truth")
    p.add_argument("--est", required=True, help="estimated trajectory file")
    p.add_argument("--gt", required=True, help="ground-truth trajectory file")
    p.add_argument("--mode", choices=("sim3", "se3"), default="sim3")
    p.add_argument("--delta", type=int, default=1, help="RPE frame delta")
    p.add_argument("--max-dt", type=float, default=None,
                   help="association window in seconds (default: half the median gt interval)")
    p.add_argument("--quat-order", choices=("xyzw", "wxyz"), default="xyzw")
    p.add_argument("--per-frame-csv", default=None, help="optional per-frame error CSV")
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_eval_traj)

    p = subs.add_parser("eval-geom", help="point-cloud metrics against a reference cloud")
    p.add_argument("--cloud", required=True, help="evaluated cloud (PLY)")
    p.add_argument("--reference", required=True, help="reference cloud (PLY)")
    p.add_argument("--k", type=int, default=16, help="roughness neighborhood size")
    p.add_argument("--icp-max-corr-dist", type=float, default=None)
    p.add_argument("--icp-max-iter", type=int, default=50)
    p.add_argument("--icp-eps", type=float, default=1e-8)
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_eval_geom)

    p = subs.add_parser("eval-mesh", help="mesh statistics")
    p.add_argument("--mesh", required=True, help="mesh (PLY)")
    p.add_argument("--unit-scale", type=float, default=100.0,
                   help="length unit to centimeters (100 for meters)")
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_eval_mesh)

    p = subs.add_parser("select-views", help="greedy weak-voxel view selection")
    p.add_argument("--cloud", required=True, help="underwater cloud (PLY)")
    p.add_argument("--cameras", required=True,
                   help="COLMAP text model directory of the candidate images")
    p.add_argument("--voxel-size", type=float, default=0.02)
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--min-depth", type=float, default=None)
    p.add_argument("--max-depth", type=float, default=None)
    p.add_argument("--image-list", default=None, help="plain-text list of selected image names")
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_select_views)

    p = subs.add_parser("eval-color", help="CIE Lab color-difference statistics")
    p.add_argument("--images", required=True, help="directory of evaluated images")
    p.add_argument("--reference", required=True, help="directory of reference images")
    p.add_argument("--mask", default=None, help="optional mask PNG (nonzero = evaluated)")
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_eval_color)

    p = subs.add_parser("eval-render", help="PSNR/SSIM over paired image directories")
    p.add_argument("--images", required=True, help="directory of rendered images")
    p.add_argument("--reference", required=True, help="directory of reference images")
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_eval_render)

    p = subs.add_parser("preprocess", help="apply preprocessing operations to a directory")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--ops", required=True,
                   help=f"comma-separated, in order; choose from {', '.join(_PREPROCESS_OPS)}")
    p.add_argument("--crop", default=None, help="x,y,w,h")
    p.add_argument("--clahe-clip", type=float, default=2.0, help="0 disables clipping")
    p.add_argument("--clahe-tiles", default="8,8")
    p.add_argument("--exposure-csv", default=None)
    p.add_argument("--reference-exposure", type=float, default=None)
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_preprocess)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.monotonic()
    try:
        parameters, metrics = args.handler(args)
        _emit_report(args, args.command, parameters, metrics, started)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: write-report: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
