"""Parameter-free class activation map polishing and evaluation.

The package turns exported CNN feature maps and classifier weights into
polished class activation maps: a seed CAM is expanded through
self-affinity matrices extracted from backbone stages and the per-stage
results are fused. Localization and segmentation metrics plus a binary
tensor container (SSAT) and a CLI round out the toolkit.
"""

from .errors import (
    BadMagicError,
    BadVersionError,
    EmptyDatasetError,
    EmptyMaskError,
    InvalidHeaderError,
    LabelOutOfRangeError,
    ManifestError,
    MissingMaskError,
    MissingStageError,
    NonFiniteDataError,
    ShapeMismatchError,
    SsaError,
    TruncatedPayloadError,
    UnsupportedDepthError,
)
from .evaluation import (
    BoundingBox,
    CurveReport,
    LocalizationReport,
    LocSample,
    MaskSample,
    MiouReport,
    binary_mask_iou,
    iou_box,
    iou_curve,
    largest_component_bbox,
    localization_errors,
    miou,
    threshold_mask,
)
from .manifest import Manifest, ManifestSample, load_manifest
from .pgm import heatmap_bytes, write_heatmap
from .pipeline import (
    SsaConfig,
    cross_guide,
    expand_cam,
    fuse,
    hardtanh_significance,
    run_ssa,
    seed_cam,
)
from .ssm import (
    l2_normalize_positions,
    second_sa_block,
    self_affinity,
    smooth_gate,
    ssm_forward,
    sum_normalize_rows,
)
from .tensor_core import (
    load_tensor,
    minmax_normalize,
    reshape,
    resize_bilinear,
    save_tensor,
)

__version__ = "0.1.0"
