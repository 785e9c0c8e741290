"""Command-line front end.

One binary, subcommands per task.  JSON results go to stdout (or
--output); human-readable summaries go to stderr and are silenced by
--quiet.  Exit codes: 0 success, 2 unreadable or malformed input,
3 algorithmic failure, 4 contract violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import formats, metrics, splits
from .core import AlgorithmError, ContractError, InputError, Superquadric
from .fit import FitConfig, fit
from .mesh import (
    PointCloud,
    TriangleMesh,
    is_watertight,
    make_mesh,
    mesh_volume,
    resample_mesh,
    sample_surface,
    voxelize_mesh,
    voxelize_superquadric,
)

_DEFAULT_RESAMPLE = 4096


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _note(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _load_cloud_for_fit(args) -> PointCloud:
    shape = formats.load_shape(args.input)
    if isinstance(shape, Superquadric):
        raise InputError(f"{args.input}: already a superquadric; fit wants a cloud or mesh")
    if isinstance(shape, TriangleMesh):
        if shape.faces.shape[0] == 0:
            return PointCloud(shape.vertices)
        if not is_watertight(shape):
            _note(args, f"warning: {args.input} is not watertight; resampling {args.resample} surface points before fitting")
        else:
            _note(args, f"resampling {args.resample} surface points from {args.input}")
        return resample_mesh(shape, args.resample, seed=args.seed)
    return shape


def _cmd_fit(args) -> int:
    cloud = _load_cloud_for_fit(args)
    config = FitConfig(
        max_iters=args.max_iters,
        tol=args.tol,
        w0=args.w0,
        sigma_init=args.sigma_init,
        estimate_w0=args.estimate_w0,
        seed=args.seed,
    )
    report = fit(cloud, config)
    _note(
        args,
        f"fit: {len(cloud)} points, {report.iterations} iterations, "
        f"converged={report.converged}, switched={report.switched}, sigma={report.sigma:.4f} mm",
    )
    _emit(args, report.to_dict())
    return 0


def _cmd_sample(args) -> int:
    sq = formats.read_theta(args.theta)
    cloud = sample_surface(sq, args.n, seed=args.seed)
    if args.output:
        formats.write_xyz(args.output, cloud)
        _note(args, f"wrote {args.n} surface points to {args.output}")
    else:
        for p in cloud.points:
            sys.stdout.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
    return 0


def _cmd_mesh(args) -> int:
    sq = formats.read_theta(args.theta)
    mesh = make_mesh(sq, args.resolution)
    out = args.output or (os.path.splitext(args.theta)[0] + ".obj")
    formats.write_obj(out, mesh)
    _note(
        args,
        f"wrote {mesh.vertices.shape[0]} vertices / {mesh.faces.shape[0]} faces to {out}",
    )
    return 0


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise InputError(f"bad {what} list {text!r}: {exc}") from exc
    if not vals:
        raise InputError(f"empty {what} list")
    return vals


def _cmd_sweep(args) -> int:
    eps1 = _parse_float_list(args.eps1, "eps1")
    eps2 = _parse_float_list(args.eps2, "eps2")
    scales = _parse_float_list(args.scale, "scale")
    if len(scales) != 3:
        raise InputError(f"scale wants ax,ay,az, got {args.scale!r}")
    for v in eps1 + eps2:
        if not 0.1 <= v <= 2.0:
            raise InputError(f"shape exponent {v} outside [0.1, 2.0]")
    os.makedirs(args.outdir, exist_ok=True)
    written = []
    for e1 in eps1:
        for e2 in eps2:
            sq = Superquadric.from_params(e1, e2, scales)
            mesh = make_mesh(sq, args.resolution)
            name = f"sq_e1-{e1:g}_e2-{e2:g}.obj"
            formats.write_obj(os.path.join(args.outdir, name), mesh)
            written.append({"file": name, "eps1": e1, "eps2": e2, "volume_mm3": mesh_volume(mesh)})
    _note(args, f"wrote {len(written)} meshes to {args.outdir}")
    _emit(args, {"cells": written})
    return 0


def _cmd_ingest(args) -> int:
    mesh = formats.load_mesh(args.input)
    if args.resample is not None:
        cloud = resample_mesh(mesh, args.resample, seed=args.seed)
        if args.output:
            formats.write_xyz(args.output, cloud)
            _note(args, f"wrote {args.resample} points to {args.output}")
        else:
            for p in cloud.points:
                sys.stdout.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
        return 0
    _emit(
        args,
        {
            "vertices": int(mesh.vertices.shape[0]),
            "faces": int(mesh.faces.shape[0]),
            "watertight": is_watertight(mesh),
        },
    )
    return 0


def _load_cloudlike(path) -> np.ndarray:
    shape = formats.load_shape(path)
    if isinstance(shape, Superquadric):
        raise InputError(f"{path}: expected a cloud or mesh, found superquadric parameters")
    if isinstance(shape, TriangleMesh):
        return shape.vertices
    return shape.points


def _metric_payload(report: metrics.MetricReport, args) -> int:
    _note(args, f"{report.name} = {report.value:.6g} {report.units}")
    _emit(args, report.to_dict())
    return 0


def _cmd_metrics_chamfer(args) -> int:
    a = _load_cloudlike(args.a)
    b = _load_cloudlike(args.b)
    value = metrics.chamfer(a, b, squared=not args.root)
    units = "mm" if args.root else "mm2"
    return _metric_payload(metrics.MetricReport("chamfer", value, units), args)


def _cmd_metrics_mepe(args) -> int:
    pred = formats.read_joints(args.predicted)
    ref = formats.read_joints(args.reference)
    return _metric_payload(metrics.MetricReport("mepe", metrics.mepe(pred, ref), "mm"), args)


def _cmd_metrics_penetration(args) -> int:
    hand = _load_cloudlike(args.hand)
    obj = formats.load_shape(args.object)
    if isinstance(obj, PointCloud):
        raise InputError(f"{args.object}: penetration wants a superquadric JSON or a mesh")
    value = metrics.penetration_depth(hand, obj)
    return _metric_payload(metrics.MetricReport("penetration_depth", value, "mm"), args)


def _voxelize_any(path, voxel_size):
    shape = formats.load_shape(path)
    if isinstance(shape, Superquadric):
        return voxelize_superquadric(shape, voxel_size)
    if isinstance(shape, TriangleMesh):
        return voxelize_mesh(shape, voxel_size)
    raise InputError(f"{path}: expected a superquadric JSON or a mesh")


def _cmd_metrics_volume(args) -> int:
    ga = _voxelize_any(args.a, args.voxel_size)
    gb = _voxelize_any(args.b, args.voxel_size)
    value = metrics.intersection_volume(ga, gb)
    return _metric_payload(metrics.MetricReport("intersection_volume", value, "cm3"), args)


def _cmd_metrics_theta_l1(args) -> int:
    a = formats.read_theta(args.a)
    b = formats.read_theta(args.b)
    return _metric_payload(metrics.MetricReport("theta_l1", metrics.theta_l1(a, b), "mixed"), args)


def _cmd_splits_make(args) -> int:
    if args.mode == "s0":
        if not args.train or not args.test:
            raise InputError("mode s0 needs --train and --test manifests")
        fold = splits.make_s0(splits.read_manifest(args.train), splits.read_manifest(args.test))
        folds = [fold]
    else:
        if not args.manifest:
            raise InputError(f"mode {args.mode} needs a manifest")
        records = splits.read_manifest(args.manifest)
        if args.mode == "s1":
            nouns = args.nouns.split(",") if args.nouns else None
            folds = splits.make_s1(records, nouns=nouns)
        else:
            pairs = None
            if args.pairs:
                pairs = []
                for chunk in args.pairs.split(","):
                    parts = chunk.split("+")
                    if len(parts) != 2:
                        raise InputError(f"bad pair {chunk!r}; want nounA+nounB")
                    pairs.append((parts[0], parts[1]))
            folds = splits.make_s2(records, pairs=pairs, seed=args.seed)
    payload = {"folds": [f.to_dict() for f in folds]}
    _note(args, f"{len(folds)} folds")
    _emit(args, payload)
    return 0


def _cmd_splits_score(args) -> int:
    folds = splits.read_folds(args.folds)
    predictions = splits.read_predictions(args.predictions)
    labels = splits.read_labels(args.labels)
    summary = splits.score_folds(folds, predictions, labels)
    _note(args, f"mean accuracy {summary.mean:.4f} +/- {summary.std:.4f} over {len(folds)} folds")
    _emit(args, summary.to_dict())
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized steps")
    common.add_argument("--output", default=None, help="write JSON/file output here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="suppress stderr summaries")

    parser = argparse.ArgumentParser(prog="sqkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="recover a superquadric from a cloud or mesh")
    p.add_argument("input", help="point cloud (.xyz text), mesh (.obj/.ply)")
    p.add_argument("--resample", type=int, default=_DEFAULT_RESAMPLE, help="points drawn from mesh inputs")
    p.add_argument("--max-iters", type=int, default=60)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--w0", type=float, default=0.1, help="outlier prior probability")
    p.add_argument("--sigma-init", type=float, default=None, help="initial noise scale, mm")
    p.add_argument("--estimate-w0", action="store_true", help="re-estimate the outlier prior each round")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("sample", parents=[common], help="draw area-uniform surface points")
    p.add_argument("theta", help="superquadric JSON")
    p.add_argument("-n", type=int, default=2000, help="number of points")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("mesh", parents=[common], help="triangulate a superquadric to OBJ")
    p.add_argument("theta", help="superquadric JSON")
    p.add_argument("--resolution", type=int, default=48)
    p.set_defaults(func=_cmd_mesh)

    p = sub.add_parser("sweep", parents=[common], help="mesh a grid of shape exponents")
    p.add_argument("--eps1", default="0.1,0.5,1.0,1.5,2.0", help="comma list of eps1 values")
    p.add_argument("--eps2", default="0.1,0.5,1.0,1.5,2.0", help="comma list of eps2 values")
    p.add_argument("--scale", default="20,20,20", help="ax,ay,az in mm")
    p.add_argument("--resolution", type=int, default=48)
    p.add_argument("--outdir", default="sweep")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("ingest", parents=[common], help="inspect or resample a mesh")
    p.add_argument("input", help="mesh (.obj/.ply)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--check-watertight", action="store_true", help="report watertightness")
    g.add_argument("--resample", type=int, default=None, help="emit N area-uniform surface points")
    p.set_defaults(func=_cmd_ingest)

    pm = sub.add_parser("metrics", help="evaluation metrics")
    msub = pm.add_subparsers(dest="metric", required=True)

    p = msub.add_parser("chamfer", parents=[common], help="symmetric nearest-neighbor distance")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--root", action="store_true", help="report mm instead of squared mm")
    p.set_defaults(func=_cmd_metrics_chamfer)

    p = msub.add_parser("mepe", parents=[common], help="mean joint error over 21 joints")
    p.add_argument("predicted")
    p.add_argument("reference")
    p.set_defaults(func=_cmd_metrics_mepe)

    p = msub.add_parser("penetration", parents=[common], help="max depth of hand points inside an object")
    p.add_argument("hand", help="hand vertices or joints (.xyz/.obj/.ply)")
    p.add_argument("object", help="superquadric JSON or mesh")
    p.set_defaults(func=_cmd_metrics_penetration)

    p = msub.add_parser("volume", parents=[common], help="voxel intersection volume")
    p.add_argument("a", help="superquadric JSON or mesh")
    p.add_argument("b", help="superquadric JSON or mesh")
    p.add_argument("--voxel-size", type=float, default=5.0, help="voxel edge, mm")
    p.set_defaults(func=_cmd_metrics_volume)

    p = msub.add_parser("theta-l1", parents=[common], help="relabeling-invariant parameter distance")
    p.add_argument("a", help="superquadric JSON")
    p.add_argument("b", help="superquadric JSON")
    p.set_defaults(func=_cmd_metrics_theta_l1)

    ps = sub.add_parser("splits", help="compositional dataset splits")
    ssub = ps.add_subparsers(dest="splitcmd", required=True)

    p = ssub.add_parser("make", parents=[common], help="build folds from a manifest")
    p.add_argument("manifest", nargs="?", help="JSON-lines manifest (s1/s2)")
    p.add_argument("--mode", choices=("s0", "s1", "s2"), default="s1")
    p.add_argument("--train", help="train manifest (s0)")
    p.add_argument("--test", help="test manifest (s0)")
    p.add_argument("--nouns", help="comma list restricting s1 folds")
    p.add_argument("--pairs", help="comma list of nounA+nounB pairs (s2)")
    p.set_defaults(func=_cmd_splits_make)

    p = ssub.add_parser("score", parents=[common], help="aggregate per-fold accuracy")
    p.add_argument("folds", help="folds JSON")
    p.add_argument("predictions", help="JSON-lines {fold, id, label}")
    p.add_argument("labels", help="JSON-lines {id, label}")
    p.set_defaults(func=_cmd_splits_score)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AlgorithmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
