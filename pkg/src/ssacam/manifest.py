"""JSON dataset manifest: binds sample ids to tensors and ground truth.

A manifest is a JSON object with a "samples" list. Each record:

    {
      "id": "val_0001",
      "stage4": "tensors/val_0001_s4.ssat",     # optional
      "stage5": "tensors/val_0001_s5.ssat",
      "weights": "tensors/fc_weights.ssat",
      "gt_class": 7,
      "predicted_classes": [7, 2, 0],           # at most 5 entries
      "gt_boxes": [[12, 30, 180, 200]],         # [x0, y0, x1, y1], optional
      "gt_mask": "masks/val_0001.ssat",         # optional, rank-2 SSAT
      "image_height": 224,
      "image_width": 224
    }

Relative paths resolve against the manifest's directory. Every referenced
path must exist at load time and box coordinates must lie within the
declared image dims.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError

STAGE_KEYS = {3: "stage3", 4: "stage4", 5: "stage5"}


@dataclass
class ManifestSample:
    id: str
    stage_paths: dict[int, Path]
    weights_path: Path
    gt_class: int
    predicted_classes: list[int]
    gt_boxes: list[tuple[int, int, int, int]]
    gt_mask_path: Path | None
    image_height: int
    image_width: int


@dataclass
class Manifest:
    path: Path
    samples: list[ManifestSample]

    def __post_init__(self):
        self.by_id = {s.id: s for s in self.samples}

    def get(self, sample_id: str) -> ManifestSample:
        try:
            return self.by_id[sample_id]
        except KeyError:
            raise ManifestError(f"unknown sample id {sample_id!r}") from None


def _resolve(base: Path, rel, sample_id: str, what: str) -> Path:
    path = base / str(rel)
    if not path.is_file():
        raise ManifestError(f"sample {sample_id!r}: {what} path {path} does not exist")
    return path


def _int_field(record: dict, key: str, sample_id: str) -> int:
    try:
        return int(record[key])
    except KeyError:
        raise ManifestError(f"sample {sample_id!r}: missing {key!r}") from None
    except (TypeError, ValueError):
        raise ManifestError(f"sample {sample_id!r}: {key!r} must be an integer") from None


def _parse_sample(record: dict, base: Path) -> ManifestSample:
    sample_id = str(record.get("id", ""))
    if not sample_id:
        raise ManifestError("sample record without an 'id'")

    stage_paths = {
        stage: _resolve(base, record[key], sample_id, key)
        for stage, key in STAGE_KEYS.items()
        if key in record
    }
    if "weights" not in record:
        raise ManifestError(f"sample {sample_id!r}: missing 'weights'")
    weights = _resolve(base, record["weights"], sample_id, "weights")

    gt_class = _int_field(record, "gt_class", sample_id)
    if gt_class < 0:
        raise ManifestError(f"sample {sample_id!r}: gt_class must be >= 0")

    preds = [int(p) for p in record.get("predicted_classes", [])]
    if len(preds) > 5:
        raise ManifestError(f"sample {sample_id!r}: more than 5 predicted classes")

    height = _int_field(record, "image_height", sample_id)
    width = _int_field(record, "image_width", sample_id)
    if height < 1 or width < 1:
        raise ManifestError(f"sample {sample_id!r}: invalid image dims {height}x{width}")

    boxes = []
    for raw in record.get("gt_boxes", []):
        if len(raw) != 4:
            raise ManifestError(f"sample {sample_id!r}: box {raw} is not [x0, y0, x1, y1]")
        x0, y0, x1, y1 = (int(v) for v in raw)
        if not (0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height):
            raise ManifestError(
                f"sample {sample_id!r}: box {raw} outside {width}x{height} image"
            )
        boxes.append((x0, y0, x1, y1))

    mask = None
    if record.get("gt_mask"):
        mask = _resolve(base, record["gt_mask"], sample_id, "gt_mask")

    return ManifestSample(
        id=sample_id,
        stage_paths=stage_paths,
        weights_path=weights,
        gt_class=gt_class,
        predicted_classes=preds,
        gt_boxes=boxes,
        gt_mask_path=mask,
        image_height=height,
        image_width=width,
    )


def load_manifest(path) -> Manifest:
    """Parse and validate a manifest file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("samples"), list):
        raise ManifestError(f"manifest {path} must be an object with a 'samples' list")
    base = path.parent
    samples = [_parse_sample(rec, base) for rec in doc["samples"]]
    if len({s.id for s in samples}) != len(samples):
        raise ManifestError(f"manifest {path} has duplicate sample ids")
    return Manifest(path=path, samples=samples)
