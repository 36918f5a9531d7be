"""A complete CLI session against a generated dataset.

Builds SSAT tensors and a JSON manifest in a temp directory, then drives
every subcommand the way an external caller would.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from ssacam import save_tensor

root = Path(tempfile.mkdtemp(prefix="ssacam_cli_demo_"))
tensors = root / "tensors"
tensors.mkdir()
rng = np.random.default_rng(3)

# --- Export a fake backbone: two samples, stages 4 and 5, one-hot weights ---

N_CLASSES, K5, K4, SIDE = 2, 4, 3, 6
weights = np.zeros((N_CLASSES, K5), dtype=np.float32)
weights[0, 0] = weights[1, 1] = 1.0
save_tensor(weights, tensors / "weights.ssat")

records = []
for sid, rect in (("img0", (1, 1, 4, 4)), ("img1", (2, 2, 6, 6))):
    x0, y0, x1, y1 = rect
    inside = np.zeros((SIDE, SIDE), dtype=np.float32)
    inside[y0:y1, x0:x1] = 1.0
    # Object pixels share channel 1 (the class evidence), background pixels
    # share channel 2 (texture); small noise on top.
    f5 = rng.normal(0, 0.05, size=(K5, SIDE, SIDE)).astype(np.float32)
    f5[1] += inside
    f5[2] += 1.0 - inside
    # Stage 4 at twice the resolution with the same structure.
    inside4 = np.zeros((2 * SIDE, 2 * SIDE), dtype=np.float32)
    inside4[2 * y0:2 * y1, 2 * x0:2 * x1] = 1.0
    f4 = rng.normal(0, 0.05, size=(K4, 2 * SIDE, 2 * SIDE)).astype(np.float32)
    f4[0] += inside4
    f4[1] += 1.0 - inside4
    save_tensor(f5, tensors / f"{sid}_s5.ssat")
    save_tensor(f4, tensors / f"{sid}_s4.ssat")

    mask = np.zeros((SIDE, SIDE), dtype=np.float32)
    mask[y0:y1, x0:x1] = 1.0
    save_tensor(mask, tensors / f"{sid}_mask.ssat")

    records.append({
        "id": sid,
        "stage4": f"tensors/{sid}_s4.ssat",
        "stage5": f"tensors/{sid}_s5.ssat",
        "weights": "tensors/weights.ssat",
        "gt_class": 1,
        "predicted_classes": [1, 0],
        "gt_boxes": [list(rect)],
        "gt_mask": f"tensors/{sid}_mask.ssat",
        "image_height": SIDE,
        "image_width": SIDE,
    })

manifest = root / "manifest.json"
manifest.write_text(json.dumps({"samples": records}, indent=1))
print(f"dataset written under {root}\n")


def run(*args):
    cmd = [sys.executable, "-m", "ssacam", *[str(a) for a in args]]
    print("$ ssacam " + " ".join(str(a) for a in args))
    proc = subprocess.run(cmd, capture_output=True, text=True)
    print(proc.stdout.rstrip() or proc.stderr.rstrip())
    print()
    return proc


# Seed CAM export: SSAT tensor plus a PGM heatmap.
run("cam", manifest, "img0", 1, root / "img0_seed")

# Affinity-polished CAM with the default stage-4 + stage-5 fusion.
run("ssa", manifest, "img0", 1, root / "img0_ssa", "--stages", "4,5", "--n-sa", "2")

# Localization metrics over the manifest, with a per-sample CSV.
run("eval-loc", manifest, "--mode", "ssa", "--tau", "0.2",
    "--csv", root / "per_sample.csv", "--jobs", "2")

# Threshold sweep of foreground IoU against the stored masks.
run("iou-curve", manifest, "--mode", "cam", "--tau-grid", "0.2,0.4,0.6,0.8")

# mIoU between two directories of class-index grids (gt vs itself here).
gt_dir = root / "gt"
gt_dir.mkdir()
for rec in records:
    src = tensors / Path(rec["gt_mask"]).name
    (gt_dir / src.name).write_bytes(src.read_bytes())
run("miou", gt_dir, gt_dir, "--classes", 2)

# Usage errors exit with code 2 and argparse help text.
proc = run("ssa", manifest, "img0", 1, root / "bad", "--n-sa", "9")
print(f"exit code for --n-sa 9: {proc.returncode}")
