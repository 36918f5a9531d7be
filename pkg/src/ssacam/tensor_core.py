"""Dense float32 tensor values, the SSAT binary container, and shape utilities.

Tensors are plain ``numpy.ndarray`` objects with dtype float32, rank 1-4,
row-major layout (last dimension fastest) and finite entries. The SSAT
container is a fixed little-endian layout:

    magic   4 bytes         b"SSAT"
    version uint16          1
    rank    uint16          1..4
    dims    rank * uint32   extents, each >= 1
    payload prod(dims) * float32

Save followed by load is bit-identical. Reductions (norms, sums, min/max
scaling) accumulate in float64 and round back to float32 at the operation
boundary.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .errors import (
    BadMagicError,
    BadVersionError,
    InvalidHeaderError,
    NonFiniteDataError,
    ShapeMismatchError,
    TruncatedPayloadError,
)

MAGIC = b"SSAT"
VERSION = 1

_HEADER = struct.Struct("<4sHH")


def as_tensor(data, rank: int | None = None) -> np.ndarray:
    """Coerce ``data`` to a valid float32 tensor and check the invariants.

    Raises NonFiniteDataError on NaN/Inf and InvalidHeaderError on a rank
    outside 1..4 or a zero extent. If ``rank`` is given the exact rank is
    required as well.
    """
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if not 1 <= arr.ndim <= 4:
        raise InvalidHeaderError(f"tensor rank must be 1..4, got {arr.ndim}")
    if rank is not None and arr.ndim != rank:
        raise ShapeMismatchError(f"expected rank {rank} tensor, got rank {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise InvalidHeaderError(f"all extents must be >= 1, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteDataError("tensor contains NaN or Inf")
    return arr


def atomic_write_bytes(path, data: bytes) -> None:
    """Write ``data`` to ``path`` via a temp file + rename in the same dir."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def save_tensor(t: np.ndarray, path) -> None:
    """Serialize a tensor to ``path`` in the SSAT layout (atomically)."""
    arr = as_tensor(t)
    header = _HEADER.pack(MAGIC, VERSION, arr.ndim)
    dims = np.asarray(arr.shape, dtype="<u4").tobytes()
    payload = arr.astype("<f4", copy=False).tobytes(order="C")
    atomic_write_bytes(path, header + dims + payload)


def load_tensor(path) -> np.ndarray:
    """Read an SSAT file back into a float32 tensor, bit-exactly."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagicError(f"{path}: not an SSAT file")
    if len(blob) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: header truncated")
    _, version, rank = _HEADER.unpack_from(blob)
    if version != VERSION:
        raise BadVersionError(f"{path}: unsupported SSAT version {version}")
    if not 1 <= rank <= 4:
        raise InvalidHeaderError(f"{path}: rank {rank} outside 1..4")
    dims_end = _HEADER.size + 4 * rank
    if len(blob) < dims_end:
        raise TruncatedPayloadError(f"{path}: dims truncated")
    dims = np.frombuffer(blob, dtype="<u4", count=rank, offset=_HEADER.size)
    if (dims < 1).any():
        raise InvalidHeaderError(f"{path}: zero extent in dims {tuple(dims)}")
    count = int(np.prod(dims.astype(np.int64)))
    expected = dims_end + 4 * count
    if len(blob) != expected:
        raise TruncatedPayloadError(
            f"{path}: payload is {len(blob) - dims_end} bytes, expected {4 * count}"
        )
    flat = np.frombuffer(blob, dtype="<f4", count=count, offset=dims_end)
    arr = flat.reshape(tuple(int(d) for d in dims)).astype(np.float32, copy=True)
    if not np.isfinite(arr).all():
        raise NonFiniteDataError(f"{path}: payload contains NaN or Inf")
    return arr


def reshape(t: np.ndarray, new_dims) -> np.ndarray:
    """Reinterpret the same row-major buffer under new extents."""
    arr = as_tensor(t)
    new_dims = tuple(int(d) for d in new_dims)
    if not 1 <= len(new_dims) <= 4 or any(d < 1 for d in new_dims):
        raise InvalidHeaderError(f"invalid target dims {new_dims}")
    if int(np.prod(new_dims)) != arr.size:
        raise ShapeMismatchError(
            f"cannot reshape {arr.shape} ({arr.size} elems) to {new_dims}"
        )
    return arr.reshape(new_dims)


def _bilinear_axis(in_size: int, out_size: int):
    # Half-pixel-center source coordinates (align_corners=False), clamped to
    # the valid range so edge pixels are repeated rather than extrapolated.
    scale = in_size / out_size
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, float(in_size - 1))
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, in_size - 1)
    frac = src - lo
    return lo, hi, frac


def resize_bilinear(t: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a channels*H*W tensor spatially with bilinear interpolation.

    Uses the half-pixel-center (align_corners=False) convention. Output
    values are convex combinations of inputs, so each channel stays within
    its own [min, max]. Resizing to the input size is an exact identity.
    """
    arr = as_tensor(t, rank=3)
    out_h, out_w = int(out_h), int(out_w)
    if out_h < 1 or out_w < 1:
        raise InvalidHeaderError(f"invalid output size {(out_h, out_w)}")
    _, h, w = arr.shape
    y0, y1, fy = _bilinear_axis(h, out_h)
    x0, x1, fx = _bilinear_axis(w, out_w)
    data = arr.astype(np.float64)
    rows = data[:, y0, :] * (1.0 - fy)[None, :, None] + data[:, y1, :] * fy[None, :, None]
    out = rows[:, :, x0] * (1.0 - fx) + rows[:, :, x1] * fx
    return out.astype(np.float32)


def minmax_normalize(t: np.ndarray) -> np.ndarray:
    """Rescale a tensor to [0, 1] over all elements.

    A constant tensor (max == min) maps to all zeros: a flat map carries no
    signal and dividing by the zero range is undefined.
    """
    arr = as_tensor(t)
    data = arr.astype(np.float64)
    lo = data.min()
    hi = data.max()
    if hi == lo:
        return np.zeros_like(arr)
    return ((data - lo) / (hi - lo)).astype(np.float32)
