"""Localization and segmentation metrics over activation maps.

Covers the standard weakly-supervised measurement surface: thresholding a
normalized map into a binary mask, extracting a bounding box from its
largest connected component, top-1 / top-5 / known-class localization error
at the 50% IoU bar, threshold-swept foreground IoU curves against
ground-truth masks, and confusion-matrix mean IoU for multi-class grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    EmptyDatasetError,
    EmptyMaskError,
    LabelOutOfRangeError,
    ShapeMismatchError,
)
from .tensor_core import as_tensor, minmax_normalize

IGNORE_LABEL = 255

# ndimage connectivity structures: 4-neighbour cross vs full 8-neighbour block.
_STRUCTURES = {
    4: np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool),
    8: np.ones((3, 3), dtype=bool),
}


@dataclass(frozen=True)
class BoundingBox:
    """Pixel box with inclusive-exclusive extents: x0 <= x < x1, y0 <= y < y1."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 >= self.x1 or self.y0 >= self.y1:
            raise ValueError(f"degenerate box {(self.x0, self.y0, self.x1, self.y1)}")

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)


@dataclass
class LocSample:
    """One localization sample: CAM, ground-truth boxes, class labels."""

    cam: np.ndarray
    gt_boxes: list[BoundingBox]
    gt_class: int
    predicted_classes: list[int]

    def __post_init__(self):
        if not self.gt_boxes:
            raise ValueError("gt_boxes must be nonempty")
        if len(self.predicted_classes) > 5:
            raise ValueError("predicted_classes has more than 5 entries")


@dataclass
class MaskSample:
    """One segmentation sample: a score map and its class-index mask."""

    score_map: np.ndarray
    gt_mask: np.ndarray


@dataclass
class SampleLocResult:
    iou: float
    gt_known: bool
    top1: bool
    top5: bool


@dataclass
class LocalizationReport:
    """Error percentages (100 * (1 - correct/total)) plus per-sample detail."""

    top1_error: float
    top5_error: float
    gt_known_error: float
    per_sample: list[SampleLocResult] = field(default_factory=list)


@dataclass
class CurveReport:
    """(threshold, mean foreground IoU) points and the curve's peak."""

    points: list[tuple[float, float]]
    peak_tau: float
    peak_iou: float


@dataclass
class MiouReport:
    """Per-class IoU (NaN where a class is absent from gt and pred) and mean."""

    per_class: np.ndarray
    mean: float

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.per_class)


def threshold_mask(score_map: np.ndarray, tau: float) -> np.ndarray:
    """Binarize a 2-D map: True where the min-max-normalized value >= tau."""
    arr = as_tensor(score_map, rank=2)
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    return minmax_normalize(arr) >= np.float32(tau)


def largest_component_bbox(mask: np.ndarray, connectivity: int = 4) -> BoundingBox:
    """Tight box around the largest connected True component.

    Components use 4-connectivity by default (8 behind the flag). Area ties
    break toward the component whose first pixel comes earliest in row-major
    scan order.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ShapeMismatchError(f"mask must be 2-D, got shape {mask.shape}")
    if connectivity not in _STRUCTURES:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    if not mask.any():
        raise EmptyMaskError("mask has no foreground pixel")
    labels, n = ndimage.label(mask, structure=_STRUCTURES[connectivity])
    counts = np.bincount(labels.ravel(), minlength=n + 1)
    counts[0] = 0
    best_area = counts.max()
    candidates = np.flatnonzero(counts == best_area)
    # First pixel in scan order decides ties deterministically.
    flat = labels.ravel()
    best = min(candidates, key=lambda lab: int(np.flatnonzero(flat == lab)[0]))
    ys, xs = np.nonzero(labels == best)
    return BoundingBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def iou_box(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes, in [0, 1]."""
    ix = max(0, min(a.x1, b.x1) - max(a.x0, b.x0))
    iy = max(0, min(a.y1, b.y1) - max(a.y0, b.y0))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


def _locate(sample: LocSample, tau: float, connectivity: int) -> SampleLocResult:
    cam = as_tensor(sample.cam, rank=3)
    if not 0 <= sample.gt_class < cam.shape[0]:
        raise ShapeMismatchError(
            f"gt_class {sample.gt_class} outside CAM with {cam.shape[0]} channels"
        )
    channel = cam[sample.gt_class]
    try:
        box = largest_component_bbox(threshold_mask(channel, tau), connectivity)
    except EmptyMaskError:
        # Constant channel thresholds to nothing: counts as a miss.
        return SampleLocResult(iou=0.0, gt_known=False, top1=False, top5=False)
    best_iou = max(iou_box(box, gt) for gt in sample.gt_boxes)
    gt_known = best_iou >= 0.5
    preds = sample.predicted_classes
    top1 = gt_known and bool(preds) and preds[0] == sample.gt_class
    top5 = gt_known and sample.gt_class in preds
    return SampleLocResult(iou=best_iou, gt_known=gt_known, top1=top1, top5=top5)


def localization_errors(
    samples: list[LocSample], tau: float, connectivity: int = 4
) -> LocalizationReport:
    """Top-1 / top-5 / known-class localization error at the 50% IoU bar.

    The box is extracted from the ground-truth class channel at threshold
    ``tau`` and is correct when it overlaps any ground-truth box with
    IoU >= 0.5; top-1 and top-5 additionally require the class prediction
    to be right. Errors are percentages, so top1 >= top5 >= gt_known.
    """
    if not samples:
        raise EmptyDatasetError("no localization samples")
    results = [_locate(s, tau, connectivity) for s in samples]
    n = len(results)
    top1 = 100.0 * (1.0 - sum(r.top1 for r in results) / n)
    top5 = 100.0 * (1.0 - sum(r.top5 for r in results) / n)
    gt_known = 100.0 * (1.0 - sum(r.gt_known for r in results) / n)
    return LocalizationReport(top1, top5, gt_known, results)


def binary_mask_iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """IoU of two binary masks with the empty-vs-empty case defined as 1."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    union = int((pred | gt).sum())
    if union == 0:
        return 1.0
    return int((pred & gt).sum()) / union


def iou_curve(samples: list[MaskSample], taus) -> CurveReport:
    """Mean foreground IoU against ground truth for each threshold.

    Foreground prediction at a threshold is `threshold_mask(score_map, tau)`;
    ground-truth foreground is any label > 0 that is not the ignore label.
    Ignored pixels are excluded from both sides. The peak is the highest
    mean IoU (smallest tau on ties).
    """
    if not samples:
        raise EmptyDatasetError("no mask samples")
    taus = [float(t) for t in taus]
    if not taus:
        raise ValueError("tau grid is empty")
    if any(not 0.0 <= t <= 1.0 for t in taus):
        raise ValueError("taus must lie in [0, 1]")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("taus must be strictly ascending")

    prepared = []
    for s in samples:
        score = as_tensor(s.score_map, rank=2)
        gt = np.asarray(s.gt_mask)
        if gt.shape != score.shape:
            raise ShapeMismatchError(
                f"gt mask {gt.shape} does not match score map {score.shape}"
            )
        valid = gt != IGNORE_LABEL
        prepared.append((score, (gt > 0) & valid, valid))

    points = []
    for tau in taus:
        total = 0.0
        for score, gt_fg, valid in prepared:
            pred_fg = threshold_mask(score, tau) & valid
            total += binary_mask_iou(pred_fg, gt_fg)
        points.append((tau, total / len(prepared)))

    peak_tau, peak_iou = max(points, key=lambda p: (p[1], -p[0]))
    return CurveReport(points, peak_tau, peak_iou)


def confusion_matrix(
    pred: np.ndarray, gt: np.ndarray, n_classes: int, accum: np.ndarray | None = None
) -> np.ndarray:
    """Accumulate the n_classes x n_classes confusion counts for one grid pair.

    Rows index ground truth, columns prediction; pixels whose gt label is the
    ignore value are skipped. Labels outside [0, n_classes) raise.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"pred {pred.shape} does not match gt {gt.shape}")
    pred = pred.astype(np.int64)
    gt = gt.astype(np.int64)
    valid = gt != IGNORE_LABEL
    for name, grid in (("pred", pred[valid]), ("gt", gt[valid])):
        if grid.size and (grid.min() < 0 or grid.max() >= n_classes):
            raise LabelOutOfRangeError(
                f"{name} grid has labels outside [0, {n_classes})"
            )
    if accum is None:
        accum = np.zeros((n_classes, n_classes), dtype=np.int64)
    flat = n_classes * gt[valid] + pred[valid]
    accum += np.bincount(flat, minlength=n_classes * n_classes).reshape(
        n_classes, n_classes
    )
    return accum


def miou_from_confusion(confusion: np.ndarray) -> MiouReport:
    """Per-class IoU and the mean over classes present in gt or pred."""
    gt_counts = confusion.sum(axis=1)
    pred_counts = confusion.sum(axis=0)
    inter = np.diag(confusion)
    union = gt_counts + pred_counts - inter
    per_class = np.full(confusion.shape[0], np.nan)
    present = union > 0
    per_class[present] = inter[present] / union[present]
    if not present.any():
        return MiouReport(per_class, float("nan"))
    return MiouReport(per_class, float(np.mean(per_class[present])))


def miou(preds, gts, n_classes: int) -> MiouReport:
    """Mean IoU over class-index grids from the global confusion matrix.

    ``preds`` and ``gts`` are parallel sequences of integer grids; pixels
    labeled 255 in gt are ignored. Classes absent from both sides are
    excluded from the mean.
    """
    preds = list(preds)
    gts = list(gts)
    if len(preds) != len(gts):
        raise ShapeMismatchError(
            f"{len(preds)} prediction grids vs {len(gts)} ground-truth grids"
        )
    if not preds:
        raise EmptyDatasetError("no grids to evaluate")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for pred, gt in zip(preds, gts):
        confusion = confusion_matrix(pred, gt, n_classes, confusion)
    return miou_from_confusion(confusion)
