"""Command-line front end.

Subcommands:

    cam        write the seed CAM (SSAT) and a PGM heatmap for one sample
    ssa        same outputs for the affinity-polished CAM
    eval-loc   top-1 / top-5 / known-class localization error over a manifest
    iou-curve  threshold-swept foreground IoU curve against gt masks
    miou       confusion-matrix mean IoU between two directories of grids

Exit codes: 0 success, 1 data error, 2 usage error. All file outputs are
written atomically and are byte-deterministic for identical inputs; the
SSA_JOBS environment variable overrides --jobs.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDatasetError,
    ManifestError,
    MissingMaskError,
    MissingStageError,
    ShapeMismatchError,
    SsaError,
)
from .evaluation import (
    BoundingBox,
    LocSample,
    MaskSample,
    iou_curve,
    localization_errors,
    miou,
)
from .manifest import Manifest, ManifestSample, load_manifest
from .pgm import heatmap_bytes
from .pipeline import SEED_STAGE, SsaConfig, run_ssa, seed_cam
from .tensor_core import (
    as_tensor,
    atomic_write_bytes,
    load_tensor,
    resize_bilinear,
    save_tensor,
)

DEFAULT_TAU = 0.2
DEFAULT_TAU_GRID = [round(0.05 * k, 6) for k in range(1, 20)]


class UsageError(Exception):
    """Flag combination errors detected after argparse."""


def _parse_stages(text: str) -> tuple[int, ...]:
    try:
        stages = tuple(sorted({int(p) for p in text.split(",") if p.strip()}))
    except ValueError:
        raise UsageError(f"--stages must be comma-separated integers, got {text!r}")
    if not stages:
        raise UsageError("--stages must select at least one stage")
    if any(s not in (3, 4, 5) for s in stages):
        raise UsageError(f"--stages entries must be in {{3,4,5}}, got {text!r}")
    return stages


def _parse_tau_grid(text: str) -> list[float]:
    try:
        taus = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"--tau-grid must be comma-separated floats, got {text!r}")
    if not taus:
        raise UsageError("--tau-grid is empty")
    if any(not 0.0 <= t <= 1.0 for t in taus):
        raise UsageError("--tau-grid values must lie in [0, 1]")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise UsageError("--tau-grid values must be strictly ascending")
    return taus


def _resolve_jobs(args) -> int:
    env = os.environ.get("SSA_JOBS")
    if env is not None:
        try:
            jobs = int(env)
        except ValueError:
            raise UsageError(f"SSA_JOBS must be an integer, got {env!r}")
    else:
        jobs = getattr(args, "jobs", 1)
    if jobs < 1:
        raise UsageError(f"jobs must be >= 1, got {jobs}")
    return jobs


def _pool_map(fn, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_sample_tensor(path: Path, sample_id: str) -> np.ndarray:
    try:
        return load_tensor(path)
    except SsaError as exc:
        raise type(exc)(f"sample {sample_id!r}: {exc}") from exc


def _sample_cam(sample: ManifestSample, mode: str, cfg: SsaConfig, affinity: str) -> np.ndarray:
    """Compute the classes*H*W CAM for one sample in the requested mode."""
    if SEED_STAGE not in sample.stage_paths:
        raise MissingStageError(f"sample {sample.id!r}: no stage{SEED_STAGE} tensor in manifest")
    f5 = _load_sample_tensor(sample.stage_paths[SEED_STAGE], sample.id)
    try:
        weights = as_tensor(_load_sample_tensor(sample.weights_path, sample.id), rank=2)
    except SsaError as exc:
        raise type(exc)(f"sample {sample.id!r}: weights: {exc}") from exc

    if mode == "cam":
        return seed_cam(f5, weights)

    features = {SEED_STAGE: f5}
    _, h, w = f5.shape
    for stage in cfg.stages:
        if stage == SEED_STAGE:
            continue
        if stage not in sample.stage_paths:
            raise MissingStageError(
                f"sample {sample.id!r}: no stage{stage} tensor in manifest"
            )
        feat = _load_sample_tensor(sample.stage_paths[stage], sample.id)
        feat = as_tensor(feat, rank=3)
        if feat.shape[1:] != (h, w):
            feat = resize_bilinear(feat, h, w)
        features[stage] = feat

    affinity_fn = None
    if affinity == "identity":
        affinity_fn = lambda stage, feat: np.eye(
            feat.shape[1] * feat.shape[2], dtype=np.float32
        )
    try:
        return run_ssa(features, weights, cfg, affinity_fn)
    except SsaError as exc:
        raise type(exc)(f"sample {sample.id!r}: {exc}") from exc


def _class_channel(cam: np.ndarray, class_index: int, sample_id: str) -> np.ndarray:
    if not 0 <= class_index < cam.shape[0]:
        raise ShapeMismatchError(
            f"sample {sample_id!r}: class {class_index} outside CAM with "
            f"{cam.shape[0]} channels"
        )
    return cam[class_index]


def _ssa_config(args) -> SsaConfig:
    stages = _parse_stages(args.stages)
    if getattr(args, "cross_guidance", False) and len(stages) != 2:
        raise UsageError("--cross-guidance requires exactly two --stages entries")
    return SsaConfig(
        stages=stages,
        n_sa=args.n_sa,
        cross_guidance=getattr(args, "cross_guidance", False),
    )


def _write_cam_outputs(args, cam: np.ndarray, sample: ManifestSample) -> None:
    channel = _class_channel(cam, args.class_index, sample.id)
    prefix = Path(args.out_prefix)
    if prefix.parent:
        prefix.parent.mkdir(parents=True, exist_ok=True)
    cam_path = prefix.with_name(prefix.name + ".ssat")
    pgm_path = prefix.with_name(prefix.name + ".pgm")
    save_tensor(cam, cam_path)
    if args.upscale:
        pgm = heatmap_bytes(channel, sample.image_height, sample.image_width)
    else:
        pgm = heatmap_bytes(channel)
    atomic_write_bytes(pgm_path, pgm)
    print(f"cam_file={cam_path}")
    print(f"pgm_file={pgm_path}")


def cmd_cam(args) -> None:
    manifest = load_manifest(args.manifest)
    sample = manifest.get(args.sample_id)
    cam = _sample_cam(sample, "cam", SsaConfig(stages=(SEED_STAGE,)), "ssm")
    _write_cam_outputs(args, cam, sample)


def cmd_ssa(args) -> None:
    manifest = load_manifest(args.manifest)
    sample = manifest.get(args.sample_id)
    cfg = _ssa_config(args)
    cam = _sample_cam(sample, "ssa", cfg, args.affinity)
    _write_cam_outputs(args, cam, sample)


def _loc_sample(sample: ManifestSample, mode: str, cfg: SsaConfig) -> LocSample:
    if not sample.gt_boxes:
        raise ManifestError(f"sample {sample.id!r} has no gt_boxes")
    cam = _sample_cam(sample, mode, cfg, "ssm")
    cam_img = resize_bilinear(cam, sample.image_height, sample.image_width)
    return LocSample(
        cam=cam_img,
        gt_boxes=[BoundingBox(*b) for b in sample.gt_boxes],
        gt_class=sample.gt_class,
        predicted_classes=sample.predicted_classes,
    )


def cmd_eval_loc(args) -> None:
    manifest = load_manifest(args.manifest)
    if not manifest.samples:
        raise EmptyDatasetError(f"manifest {manifest.path} has no samples")
    cfg = _ssa_config(args) if args.mode == "ssa" else SsaConfig(stages=(SEED_STAGE,))
    jobs = _resolve_jobs(args)
    samples = _pool_map(
        lambda s: _loc_sample(s, args.mode, cfg), manifest.samples, jobs
    )
    report = localization_errors(samples, args.tau, connectivity=args.connectivity)
    print(f"n_samples={len(samples)}")
    print(f"tau={args.tau:.4f}")
    print(f"top1_error={report.top1_error:.4f}")
    print(f"top5_error={report.top5_error:.4f}")
    print(f"gt_known_error={report.gt_known_error:.4f}")
    if args.csv:
        lines = ["id,iou,gt_known,top1,top5"]
        for s, r in zip(manifest.samples, report.per_sample):
            lines.append(
                f"{s.id},{r.iou:.6f},{int(r.gt_known)},{int(r.top1)},{int(r.top5)}"
            )
        atomic_write_bytes(args.csv, ("\n".join(lines) + "\n").encode("ascii"))
        print(f"csv_file={args.csv}")


def _mask_sample(sample: ManifestSample, mode: str, cfg: SsaConfig) -> MaskSample:
    if sample.gt_mask_path is None:
        raise MissingMaskError(f"sample {sample.id!r} has no gt_mask")
    gt = _load_sample_tensor(sample.gt_mask_path, sample.id)
    gt = as_tensor(gt, rank=2)
    gt_grid = np.rint(gt).astype(np.int64)
    cam = _sample_cam(sample, mode, cfg, "ssm")
    channel = _class_channel(cam, sample.gt_class, sample.id)
    mh, mw = gt_grid.shape
    if channel.shape != (mh, mw):
        channel = resize_bilinear(channel[None], mh, mw)[0]
    return MaskSample(score_map=channel, gt_mask=gt_grid)


def cmd_iou_curve(args) -> None:
    manifest = load_manifest(args.manifest)
    if not manifest.samples:
        raise EmptyDatasetError(f"manifest {manifest.path} has no samples")
    taus = _parse_tau_grid(args.tau_grid)
    cfg = _ssa_config(args) if args.mode == "ssa" else SsaConfig(stages=(SEED_STAGE,))
    jobs = _resolve_jobs(args)
    samples = _pool_map(
        lambda s: _mask_sample(s, args.mode, cfg), manifest.samples, jobs
    )
    report = iou_curve(samples, taus)
    lines = ["tau,iou"]
    for tau, value in report.points:
        lines.append(f"{tau:.6f},{value:.6f}")
    lines.append(f"peak,{report.peak_tau:.6f},{report.peak_iou:.6f}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        atomic_write_bytes(args.out, text.encode("ascii"))


def _load_grid(path: Path) -> np.ndarray:
    grid = as_tensor(load_tensor(path), rank=2)
    return np.rint(grid).astype(np.int64)


def cmd_miou(args) -> None:
    pred_dir = Path(args.pred_dir)
    gt_dir = Path(args.gt_dir)
    pred_files = sorted(p.name for p in pred_dir.glob("*.ssat"))
    gt_files = sorted(p.name for p in gt_dir.glob("*.ssat"))
    if pred_files != gt_files:
        only_pred = sorted(set(pred_files) - set(gt_files))
        only_gt = sorted(set(gt_files) - set(pred_files))
        raise ManifestError(
            f"file sets differ (pred-only: {only_pred}, gt-only: {only_gt})"
        )
    if not pred_files:
        raise EmptyDatasetError(f"no .ssat grids under {pred_dir}")
    jobs = _resolve_jobs(args)

    def load_pair(name: str):
        pred = _load_grid(pred_dir / name)
        gt = _load_grid(gt_dir / name)
        if pred.shape != gt.shape:
            raise ShapeMismatchError(
                f"{name}: pred {pred.shape} does not match gt {gt.shape}"
            )
        return pred, gt

    pairs = _pool_map(load_pair, pred_files, jobs)
    try:
        report = miou([p for p, _ in pairs], [g for _, g in pairs], args.classes)
    except SsaError as exc:
        raise type(exc)(f"{pred_dir}: {exc}") from exc
    print(f"n_files={len(pairs)}")
    print(f"classes={args.classes}")
    for idx in np.flatnonzero(report.present):
        print(f"class_{int(idx)}_iou={report.per_class[int(idx)]:.6f}")
    print(f"miou={report.mean:.6f}")


def _add_ssa_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--stages", default="4,5", help="comma-separated backbone stages (subset of 3,4,5)")
    sub.add_argument("--n-sa", type=int, choices=(1, 2, 3), default=2, dest="n_sa",
                     help="number of self-affinity blocks")
    sub.add_argument("--cross-guidance", action="store_true", dest="cross_guidance",
                     help="gate each stage's CAM by the other's clamped significance map")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssacam",
        description="Polish class activation maps with self-affinity structure and score the results.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_cam = subs.add_parser("cam", help="export the seed CAM for one sample")
    p_cam.add_argument("manifest")
    p_cam.add_argument("sample_id")
    p_cam.add_argument("class_index", type=int)
    p_cam.add_argument("out_prefix", help="writes <prefix>.ssat and <prefix>.pgm")
    p_cam.add_argument("--upscale", action="store_true", help="resize the heatmap to image dims")
    p_cam.set_defaults(func=cmd_cam)

    p_ssa = subs.add_parser("ssa", help="export the affinity-polished CAM for one sample")
    p_ssa.add_argument("manifest")
    p_ssa.add_argument("sample_id")
    p_ssa.add_argument("class_index", type=int)
    p_ssa.add_argument("out_prefix", help="writes <prefix>.ssat and <prefix>.pgm")
    _add_ssa_flags(p_ssa)
    p_ssa.add_argument("--affinity", choices=("ssm", "identity"), default="ssm",
                       help="affinity source; 'identity' is a pass-through test hook")
    p_ssa.add_argument("--upscale", action="store_true", help="resize the heatmap to image dims")
    p_ssa.set_defaults(func=cmd_ssa)

    p_loc = subs.add_parser("eval-loc", help="localization error metrics over a manifest")
    p_loc.add_argument("manifest")
    p_loc.add_argument("--mode", choices=("cam", "ssa"), default="cam")
    p_loc.add_argument("--tau", type=float, default=DEFAULT_TAU,
                       help="binarization threshold on the normalized CAM")
    _add_ssa_flags(p_loc)
    p_loc.add_argument("--connectivity", type=int, choices=(4, 8), default=4)
    p_loc.add_argument("--csv", default=None, help="write per-sample IoU rows to this file")
    p_loc.add_argument("--jobs", type=int, default=1)
    p_loc.set_defaults(func=cmd_eval_loc)

    p_curve = subs.add_parser("iou-curve", help="foreground IoU vs threshold curve")
    p_curve.add_argument("manifest")
    p_curve.add_argument("--mode", choices=("cam", "ssa"), default="cam")
    p_curve.add_argument("--tau-grid", default=",".join(f"{t:g}" for t in DEFAULT_TAU_GRID),
                         dest="tau_grid", help="comma-separated ascending thresholds")
    _add_ssa_flags(p_curve)
    p_curve.add_argument("--out", default=None, help="also write the CSV to this file")
    p_curve.add_argument("--jobs", type=int, default=1)
    p_curve.set_defaults(func=cmd_iou_curve)

    p_miou = subs.add_parser("miou", help="mean IoU between directories of class-index grids")
    p_miou.add_argument("pred_dir")
    p_miou.add_argument("gt_dir")
    p_miou.add_argument("--classes", type=int, required=True, help="number of classes")
    p_miou.add_argument("--jobs", type=int, default=1)
    p_miou.set_defaults(func=cmd_miou)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SsaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
