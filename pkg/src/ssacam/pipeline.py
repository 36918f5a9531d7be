"""End-to-end CAM polishing: seed, expand by affinity, guide, fuse.

The seed CAM is the classifier-weighted sum of last-stage feature channels.
Each selected backbone stage contributes an affinity matrix (see
:mod:`ssacam.ssm`); expanding the seed through a row-normalized affinity
replaces every pixel's score with a convex combination of scores at
semantically similar positions. Per-stage expansions are then summed
elementwise, optionally after cross-guiding one by the other's clamped
significance map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import MissingStageError, ShapeMismatchError, UnsupportedDepthError
from .ssm import SUPPORTED_DEPTHS, ssm_forward
from .tensor_core import as_tensor

VALID_STAGES = (3, 4, 5)
SEED_STAGE = 5

# Hook signature: (stage, feature_map) -> (H*W, H*W) affinity matrix.
AffinityFn = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SsaConfig:
    """Pipeline configuration: which stages to expand through and how.

    Defaults follow the best-performing setup: stages 4+5 fused, two
    self-affinity blocks, no cross-guidance (guidance is a multi-label
    segmentation-mode option and requires exactly two stages).
    """

    stages: tuple[int, ...] = (4, 5)
    n_sa: int = 2
    cross_guidance: bool = False
    fuse_mode: str = "sum"
    position_norm: str = "l2"

    def __post_init__(self):
        stages = tuple(sorted(set(int(s) for s in self.stages)))
        if not stages:
            raise ValueError("stages must be nonempty")
        bad = [s for s in stages if s not in VALID_STAGES]
        if bad:
            raise ValueError(f"unknown stages {bad}; valid stages are {VALID_STAGES}")
        object.__setattr__(self, "stages", stages)
        if self.n_sa not in SUPPORTED_DEPTHS:
            raise UnsupportedDepthError(
                f"n_sa must be one of {SUPPORTED_DEPTHS}, got {self.n_sa}"
            )
        if self.fuse_mode != "sum":
            raise ValueError(f"unsupported fuse_mode {self.fuse_mode!r}")
        if self.position_norm not in ("l2", "channel_sum"):
            raise ValueError(f"unknown position_norm {self.position_norm!r}")
        if self.cross_guidance and len(stages) != 2:
            raise ValueError("cross_guidance requires exactly two stages")


def seed_cam(f5: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weight the last-stage channels by the classifier's per-class weights.

    f5 is channels*H*W, weights is classes*channels; the result is
    classes*H*W with out[m, i, j] = sum_k weights[m, k] * f5[k, i, j].
    """
    feat = as_tensor(f5, rank=3)
    w = as_tensor(weights, rank=2)
    if w.shape[1] != feat.shape[0]:
        raise ShapeMismatchError(
            f"weights expect {w.shape[1]} channels, feature map has {feat.shape[0]}"
        )
    cam = np.tensordot(w.astype(np.float64), feat.astype(np.float64), axes=([1], [0]))
    return cam.astype(np.float32)


def expand_cam(cam: np.ndarray, affinity: np.ndarray) -> np.ndarray:
    """Spread CAM scores along the affinity structure.

    Each output pixel becomes the affinity-row-weighted combination of the
    input scores: out[m, q] = sum_p affinity[q, p] * cam[m, p] over the
    flattened spatial axis. A row-stochastic affinity therefore preserves a
    constant field, and the identity matrix is a no-op.
    """
    c = as_tensor(cam, rank=3)
    s = as_tensor(affinity, rank=2)
    n, h, w = c.shape
    hw = h * w
    if s.shape != (hw, hw):
        raise ShapeMismatchError(f"affinity is {s.shape}, CAM needs ({hw}, {hw})")
    flat = c.reshape(n, hw).astype(np.float64)
    expanded = flat @ s.astype(np.float64).T
    return expanded.reshape(n, h, w).astype(np.float32)


def fuse(cp_a: np.ndarray, cp_b: np.ndarray) -> np.ndarray:
    """Elementwise sum of two expanded CAMs (commutative, associative)."""
    a = as_tensor(cp_a, rank=3)
    b = as_tensor(cp_b, rank=3)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"cannot fuse {a.shape} with {b.shape}")
    return a + b


def hardtanh_significance(cp: np.ndarray) -> np.ndarray:
    """Clamp a CAM to [0, 1], yielding its significance map."""
    return np.clip(as_tensor(cp), 0.0, 1.0)


def cross_guide(cp_a: np.ndarray, cp_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gate each CAM by the other's significance map.

    Returns (cp_a * clamp(cp_b), cp_b * clamp(cp_a)); a guide that is >= 1
    everywhere leaves its partner unchanged, a zero guide annihilates it.
    """
    a = as_tensor(cp_a, rank=3)
    b = as_tensor(cp_b, rank=3)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"cannot cross-guide {a.shape} with {b.shape}")
    return a * hardtanh_significance(b), b * hardtanh_significance(a)


def run_ssa(
    features: Mapping[int, np.ndarray],
    weights: np.ndarray,
    cfg: SsaConfig = SsaConfig(),
    affinity_fn: AffinityFn | None = None,
) -> np.ndarray:
    """Full inference: seed CAM -> per-stage affinity expansion -> fusion.

    ``features`` maps stage number to its channels*H*W tensor; stage 5 is
    always required as the seed source and every configured stage must be
    present with the same spatial dims as stage 5 (resize beforehand if the
    backbone halves resolution). ``affinity_fn`` overrides affinity
    extraction per stage - the identity-matrix hook turns the single-stage
    pipeline into a seed CAM pass-through, which is useful for testing.

    Returns the raw fused classes*H*W CAM; min-max presentation
    normalization is left to export/evaluation boundaries.
    """
    if SEED_STAGE not in features:
        raise MissingStageError(f"stage {SEED_STAGE} feature map (seed source) is required")
    missing = [s for s in cfg.stages if s not in features]
    if missing:
        raise MissingStageError(f"config selects stages {missing} but they were not supplied")

    seed = seed_cam(features[SEED_STAGE], weights)
    _, h, w = seed.shape

    expanded = []
    for stage in cfg.stages:
        feat = as_tensor(features[stage], rank=3)
        if feat.shape[1:] != (h, w):
            raise ShapeMismatchError(
                f"stage {stage} is {feat.shape[1:]}, seed CAM is {(h, w)}; "
                "resize stage tensors to the seed resolution first"
            )
        if affinity_fn is not None:
            affinity = as_tensor(affinity_fn(stage, feat), rank=2)
        else:
            affinity = ssm_forward(feat, cfg.n_sa, cfg.position_norm)
        expanded.append(expand_cam(seed, affinity))

    if cfg.cross_guidance:
        # __post_init__ guarantees exactly two stages here.
        expanded = list(cross_guide(expanded[0], expanded[1]))

    out = expanded[0]
    for cp in expanded[1:]:
        out = fuse(out, cp)
    return out
