"""Shared fixtures: a small deterministic dataset exercised by the CLI tests.

The localization manifest is hand-built so the error percentages are exactly
countable: class channels are 0/1 rectangles, so thresholded masks and boxes
are known without arithmetic. Channels not tied to a class are random but
seeded, so file bytes are reproducible run to run.
"""

import json
import os
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from ssacam import save_tensor  # noqa: E402

N_CLASSES = 3
N_CHANNELS5 = 6
N_CHANNELS4 = 4
CAM_SIDE = 5
STAGE4_SIDE = 10

# (x0, y0, x1, y1) activation rectangles per sample, plus ground truth.
LOC_SAMPLES = {
    # id: (cam_rect, gt_box, gt_class, predicted)       expected outcome
    "s1": ((1, 1, 4, 4), (1, 1, 4, 4), 1, [1, 0]),    # loc ok, top1 ok
    "s2": ((0, 0, 3, 3), (0, 0, 3, 3), 0, [2, 0]),    # loc ok, top5 only
    "s3": ((0, 0, 2, 2), (3, 3, 5, 5), 2, [2, 1]),    # loc miss (disjoint)
    "s4": ((0, 0, 3, 3), (1, 1, 4, 4), 1, [1]),       # loc miss (IoU 2/7)
}


def rect_channel(rect, side=CAM_SIDE, inside=1.0, outside=0.0):
    x0, y0, x1, y1 = rect
    plane = np.full((side, side), outside, dtype=np.float32)
    plane[y0:y1, x0:x1] = inside
    return plane


def make_stage5(rng, gt_class, rect):
    """Stage-5 features whose class channels are exact rectangles."""
    feat = np.zeros((N_CHANNELS5, CAM_SIDE, CAM_SIDE), dtype=np.float32)
    for m in range(N_CLASSES):
        if m == gt_class:
            feat[m] = rect_channel(rect)
        else:
            feat[m] = rect_channel((0, 0, 1, 1), inside=0.5)
    for k in range(N_CLASSES, N_CHANNELS5):
        feat[k] = rng.uniform(0.0, 1.0, size=(CAM_SIDE, CAM_SIDE)).astype(np.float32)
    return feat


@dataclass
class Dataset:
    root: Path
    loc_manifest: Path
    curve_manifest: Path
    err_manifest: Path
    weights_path: Path
    pred_dir: Path
    gt_dir: Path
    miou_hand_pred: Path
    miou_hand_gt: Path


def _write_manifest(path, samples):
    path.write_text(json.dumps({"samples": samples}, indent=1), encoding="utf-8")


@pytest.fixture(scope="session")
def dataset(tmp_path_factory) -> Dataset:
    root = tmp_path_factory.mktemp("dataset")
    tensors = root / "tensors"
    tensors.mkdir()
    rng = np.random.default_rng(20240817)

    # One-hot classifier weights: seed CAM channel m equals feature channel m.
    weights = np.zeros((N_CLASSES, N_CHANNELS5), dtype=np.float32)
    for m in range(N_CLASSES):
        weights[m, m] = 1.0
    weights_path = tensors / "weights.ssat"
    save_tensor(weights, weights_path)

    loc_records = []
    for sid, (rect, gt_box, gt_class, preds) in LOC_SAMPLES.items():
        f5 = make_stage5(rng, gt_class, rect)
        f4 = rng.uniform(0.0, 1.0, size=(N_CHANNELS4, STAGE4_SIDE, STAGE4_SIDE))
        save_tensor(f5, tensors / f"{sid}_s5.ssat")
        save_tensor(f4.astype(np.float32), tensors / f"{sid}_s4.ssat")
        loc_records.append(
            {
                "id": sid,
                "stage4": f"tensors/{sid}_s4.ssat",
                "stage5": f"tensors/{sid}_s5.ssat",
                "weights": "tensors/weights.ssat",
                "gt_class": gt_class,
                "predicted_classes": preds,
                "gt_boxes": [list(gt_box)],
                "image_height": CAM_SIDE,
                "image_width": CAM_SIDE,
            }
        )
    loc_manifest = root / "loc_manifest.json"
    _write_manifest(loc_manifest, loc_records)

    # Curve samples: gt mask equals (c1) / differs from (c2) the activation.
    curve_records = []
    for sid, rect, mask_rect in (
        ("c1", (1, 1, 4, 4), (1, 1, 4, 4)),
        ("c2", (0, 0, 3, 3), (0, 0, 3, 4)),  # one extra gt row
    ):
        f5 = make_stage5(rng, 1, rect)
        f4 = rng.uniform(0.0, 1.0, size=(N_CHANNELS4, STAGE4_SIDE, STAGE4_SIDE))
        save_tensor(f5, tensors / f"{sid}_s5.ssat")
        save_tensor(f4.astype(np.float32), tensors / f"{sid}_s4.ssat")
        mask = rect_channel(mask_rect)  # class 1 inside, background outside
        save_tensor(mask, tensors / f"{sid}_mask.ssat")
        curve_records.append(
            {
                "id": sid,
                "stage4": f"tensors/{sid}_s4.ssat",
                "stage5": f"tensors/{sid}_s5.ssat",
                "weights": "tensors/weights.ssat",
                "gt_class": 1,
                "predicted_classes": [1],
                "gt_boxes": [],
                "gt_mask": f"tensors/{sid}_mask.ssat",
                "image_height": CAM_SIDE,
                "image_width": CAM_SIDE,
            }
        )
    curve_manifest = root / "curve_manifest.json"
    _write_manifest(curve_manifest, curve_records)

    # Error-path samples: e1 lacks stage5, e2 has a constant class channel,
    # e3 declares a larger image for upscale tests.
    f5_e2 = make_stage5(rng, 1, (1, 1, 4, 4))
    f5_e2[0] = 0.25  # constant channel 0
    save_tensor(f5_e2, tensors / "e2_s5.ssat")
    f5_e3 = make_stage5(rng, 1, (1, 1, 4, 4))
    save_tensor(f5_e3, tensors / "e3_s5.ssat")
    f4_e1 = rng.uniform(0.0, 1.0, size=(N_CHANNELS4, STAGE4_SIDE, STAGE4_SIDE))
    save_tensor(f4_e1.astype(np.float32), tensors / "e1_s4.ssat")
    err_records = [
        {
            "id": "e1",
            "stage4": "tensors/e1_s4.ssat",
            "weights": "tensors/weights.ssat",
            "gt_class": 0,
            "predicted_classes": [0],
            "gt_boxes": [[0, 0, 2, 2]],
            "image_height": CAM_SIDE,
            "image_width": CAM_SIDE,
        },
        {
            "id": "e2",
            "stage5": "tensors/e2_s5.ssat",
            "weights": "tensors/weights.ssat",
            "gt_class": 0,
            "predicted_classes": [0],
            "gt_boxes": [[0, 0, 2, 2]],
            "image_height": CAM_SIDE,
            "image_width": CAM_SIDE,
        },
        {
            "id": "e3",
            "stage5": "tensors/e3_s5.ssat",
            "weights": "tensors/weights.ssat",
            "gt_class": 1,
            "predicted_classes": [1],
            "gt_boxes": [[2, 2, 8, 8]],
            "image_height": STAGE4_SIDE,
            "image_width": STAGE4_SIDE,
        },
    ]
    err_manifest = root / "err_manifest.json"
    _write_manifest(err_manifest, err_records)

    # miou directories: identical pair plus a hand-built pair.
    pred_dir = root / "pred"
    gt_dir = root / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    for name in ("a", "b"):
        grid = rng.integers(0, N_CLASSES, size=(4, 4)).astype(np.float32)
        save_tensor(grid, pred_dir / f"{name}.ssat")
        save_tensor(grid, gt_dir / f"{name}.ssat")

    miou_hand_pred = root / "hand_pred"
    miou_hand_gt = root / "hand_gt"
    miou_hand_pred.mkdir()
    miou_hand_gt.mkdir()
    pred_grid = np.array([[1, 0], [0, 0]], dtype=np.float32)
    gt_grid = np.array([[1, 1], [0, 0]], dtype=np.float32)
    save_tensor(pred_grid, miou_hand_pred / "x.ssat")
    save_tensor(gt_grid, miou_hand_gt / "x.ssat")

    return Dataset(
        root=root,
        loc_manifest=loc_manifest,
        curve_manifest=curve_manifest,
        err_manifest=err_manifest,
        weights_path=weights_path,
        pred_dir=pred_dir,
        gt_dir=gt_dir,
        miou_hand_pred=miou_hand_pred,
        miou_hand_gt=miou_hand_gt,
    )


def run_cli(args, env_extra=None):
    """Run the CLI in a subprocess; returns (exit_code, stdout, stderr)."""
    env = dict(os.environ)
    env["PYTHONPATH"] = str(SRC) + os.pathsep + env.get("PYTHONPATH", "")
    if env_extra:
        env.update(env_extra)
    proc = subprocess.run(
        [sys.executable, "-m", "ssacam", *[str(a) for a in args]],
        capture_output=True,
        text=True,
        env=env,
    )
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture
def cli():
    return run_cli
