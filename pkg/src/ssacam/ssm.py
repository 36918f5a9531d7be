"""Semantic-structure affinity extraction from a backbone feature map.

Given a channels*H*W feature map, produce an (H*W) x (H*W) affinity matrix
describing how strongly each spatial position relates to every other one.
The construction is parameter-free:

1. normalize each spatial position's channel vector to unit length,
2. take the Gram matrix of positions with self-affinity suppressed
   (a self-affinity block),
3. damp small noisy entries with the smooth gate x * tanh(x),
4. normalize each row to sum to 1 so a row is a convex weight vector,
5. optionally refine by re-applying a self-affinity block to the rows of
   the normalized matrix (treating each row as that position's feature),
   clipping negatives and row-normalizing again.

`ssm_forward` composes these steps; ``n_sa`` counts the total number of
self-affinity blocks applied (default 2).
"""

from __future__ import annotations

import numpy as np

from .errors import UnsupportedDepthError
from .tensor_core import as_tensor

SUPPORTED_DEPTHS = (1, 2, 3)


def l2_normalize_positions(f: np.ndarray) -> np.ndarray:
    """Flatten channels*H*W to channels*(H*W) with unit-norm position columns.

    Positions whose channel vector is all zero (flat background after a ReLU
    backbone) are left all zero.
    """
    arr = as_tensor(f, rank=3)
    c, h, w = arr.shape
    flat = arr.reshape(c, h * w).astype(np.float64)
    norms = np.sqrt((flat * flat).sum(axis=0))
    nonzero = norms > 0.0
    flat[:, nonzero] /= norms[nonzero]
    return flat.astype(np.float32)


def channel_sum_normalize(f: np.ndarray) -> np.ndarray:
    """Alternative position scaling: divide each channel by sqrt of its
    spatial sum. Kept for comparison against the unit-norm default; channels
    with a non-positive sum are zeroed.
    """
    arr = as_tensor(f, rank=3)
    c, h, w = arr.shape
    flat = arr.reshape(c, h * w).astype(np.float64)
    sums = flat.sum(axis=1)
    out = np.zeros_like(flat)
    positive = sums > 0.0
    out[positive] = flat[positive] / np.sqrt(sums[positive])[:, None]
    return out.astype(np.float32)


def self_affinity(g: np.ndarray) -> np.ndarray:
    """Gram matrix of position columns with the diagonal forced to zero.

    For unit columns the entries are cosine similarities in [-1, 1] and
    zeroing the diagonal equals subtracting the identity; for all-zero
    columns it keeps the whole row zero instead of leaving a -1 self term.
    """
    cols = as_tensor(g, rank=2).astype(np.float64)
    gram = cols.T @ cols
    np.fill_diagonal(gram, 0.0)
    return gram.astype(np.float32)


def smooth_gate(s: np.ndarray) -> np.ndarray:
    """Elementwise x * tanh(x): keeps strong affinities, damps weak ones.

    Output is nonnegative for any real input and symmetry is preserved.
    """
    arr = as_tensor(s, rank=2)
    return np.tanh(arr) * arr


def sum_normalize_rows(s: np.ndarray) -> np.ndarray:
    """Divide each row by its sum; all-zero rows stay all-zero.

    For nonnegative input every nonzero row becomes a convex weight vector.
    """
    arr = as_tensor(s, rank=2).astype(np.float64)
    row_sums = arr.sum(axis=1)
    nonzero = row_sums != 0.0
    arr[nonzero] /= row_sums[nonzero, None]
    return arr.astype(np.float32)


def second_sa_block(s: np.ndarray) -> np.ndarray:
    """Refinement self-affinity block over a row-normalized affinity matrix.

    Treats each row as a position feature: ReLU(s^T s - I) followed by the
    same row normalization. The product is symmetric before the final
    normalization and all outputs are nonnegative.
    """
    arr = as_tensor(s, rank=2).astype(np.float64)
    prod = arr.T @ arr
    prod -= np.eye(prod.shape[0])
    np.maximum(prod, 0.0, out=prod)
    return sum_normalize_rows(prod.astype(np.float32))


def ssm_forward(f: np.ndarray, n_sa: int = 2, position_norm: str = "l2") -> np.ndarray:
    """Extract the (H*W) x (H*W) affinity matrix from a channels*H*W map.

    ``n_sa`` is the total number of self-affinity blocks (1, 2 or 3; the
    default 2 is the best-performing depth). The result is row-normalized:
    every row sums to 1 or is all zero. With the default position
    normalization the output is invariant to positive scaling of ``f``.

    ``position_norm`` selects "l2" (unit-norm position columns, default) or
    "channel_sum" (literal per-channel sqrt-of-sum scaling, retained for
    comparison).
    """
    if n_sa not in SUPPORTED_DEPTHS:
        raise UnsupportedDepthError(f"n_sa must be one of {SUPPORTED_DEPTHS}, got {n_sa}")
    if position_norm == "l2":
        g = l2_normalize_positions(f)
    elif position_norm == "channel_sum":
        g = channel_sum_normalize(f)
    else:
        raise ValueError(f"unknown position_norm {position_norm!r}")
    s = sum_normalize_rows(smooth_gate(self_affinity(g)))
    for _ in range(n_sa - 1):
        s = second_sa_block(s)
    return s
