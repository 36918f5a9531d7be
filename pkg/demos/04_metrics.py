"""The measurement surface: boxes, localization error, IoU curve, mIoU.

All inputs are tiny hand-built grids so every number can be checked by
counting pixels.
"""

import numpy as np

from ssacam import (
    LocSample,
    MaskSample,
    iou_box,
    iou_curve,
    largest_component_bbox,
    localization_errors,
    miou,
    threshold_mask,
)
from ssacam.evaluation import BoundingBox

# --- Boxes ------------------------------------------------------------------

a = BoundingBox(0, 0, 10, 10)
b = BoundingBox(5, 5, 15, 15)
print(f"IoU of {a.as_tuple()} and {b.as_tuple()} = {iou_box(a, b):.6f}  (= 1/7)")

mask = np.zeros((6, 6), dtype=bool)
mask[1:3, 1:4] = True   # 6-pixel blob
mask[4, 5] = True       # lone pixel loses
print("largest component box:", largest_component_bbox(mask).as_tuple(), "\n")

# --- Localization error over four constructed samples ------------------------


def rect_cam(rect, gt_class, n_classes=3):
    x0, y0, x1, y1 = rect
    cam = np.zeros((n_classes, 5, 5), dtype=np.float32)
    cam[gt_class, y0:y1, x0:x1] = 1.0
    return cam


samples = [
    # localized and top-1 correct
    LocSample(rect_cam((1, 1, 4, 4), 1), [BoundingBox(1, 1, 4, 4)], 1, [1, 0]),
    # localized, right class only at rank 2
    LocSample(rect_cam((0, 0, 3, 3), 0), [BoundingBox(0, 0, 3, 3)], 0, [2, 0]),
    # box misses entirely
    LocSample(rect_cam((0, 0, 2, 2), 2), [BoundingBox(3, 3, 5, 5)], 2, [2, 1]),
    # overlap exists but IoU = 4/14 < 0.5
    LocSample(rect_cam((0, 0, 3, 3), 1), [BoundingBox(1, 1, 4, 4)], 1, [1]),
]
report = localization_errors(samples, tau=0.2)
print("localization over 4 samples (2 localize, of those 1 top-1, 2 top-5):")
print(f"  top1_error={report.top1_error}  top5_error={report.top5_error}"
      f"  gt_known_error={report.gt_known_error}\n")

# --- IoU curve ----------------------------------------------------------------

score = np.zeros((4, 4), dtype=np.float32)
score[1:3, 1:3] = 1.0
score[0, 0] = 0.4        # weak spurious activation
gt = np.zeros((4, 4), dtype=np.int64)
gt[1:3, 1:3] = 1
curve = iou_curve([MaskSample(score, gt)], [0.2, 0.5, 0.8])
print("IoU curve (the spurious pixel drops out above its threshold):")
for tau, value in curve.points:
    print(f"  tau={tau:.2f}  iou={value:.3f}")
print(f"  peak: tau={curve.peak_tau}  iou={curve.peak_iou}\n")

# --- mIoU ---------------------------------------------------------------------

pred = np.array([[1, 0], [0, 0]])
truth = np.array([[1, 1], [0, 0]])
result = miou([pred], [truth], n_classes=2)
print("mIoU on a 2x2 grid (fg 1/2, bg 2/3):")
print(f"  per-class = {np.round(result.per_class, 4).tolist()}")
print(f"  mean      = {result.mean:.6f}  (= 7/12)")
