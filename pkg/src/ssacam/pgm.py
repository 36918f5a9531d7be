"""Binary PGM (P5, maxval 255) heatmap export.

PGM is used instead of a compressed format so identical inputs always
produce byte-identical files, which keeps golden-file tests exact.
"""

from __future__ import annotations

import numpy as np

from .tensor_core import as_tensor, atomic_write_bytes, minmax_normalize, resize_bilinear


def heatmap_bytes(score_map: np.ndarray, out_h: int | None = None, out_w: int | None = None) -> bytes:
    """Encode a 2-D map as PGM bytes.

    The map is min-max normalized, optionally bilinearly upscaled to
    (out_h, out_w), then quantized with round-half-even to 0..255.
    """
    gray = minmax_normalize(as_tensor(score_map, rank=2))
    if out_h is not None or out_w is not None:
        if out_h is None or out_w is None:
            raise ValueError("both out_h and out_w are required for upscaling")
        gray = resize_bilinear(gray[None, :, :], out_h, out_w)[0]
    h, w = gray.shape
    pixels = np.rint(gray.astype(np.float64) * 255.0).astype(np.uint8)
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + pixels.tobytes(order="C")


def write_heatmap(path, score_map: np.ndarray, out_h: int | None = None, out_w: int | None = None) -> None:
    """Write a PGM heatmap atomically."""
    atomic_write_bytes(path, heatmap_bytes(score_map, out_h, out_w))
