"""Tensor values and the SSAT container.

Walks through the float32 tensor conventions: saving and loading the
bit-exact SSAT binary format, row-major reshapes, bilinear resizing, and
min-max normalization.
"""

import struct
import tempfile
from pathlib import Path

import numpy as np

from ssacam import load_tensor, minmax_normalize, reshape, resize_bilinear, save_tensor

workdir = Path(tempfile.mkdtemp(prefix="ssacam_demo_"))
print(f"writing demo files under {workdir}\n")

# --- 1. Round-trip a tensor through the SSAT container --------------------

t = np.arange(12, dtype=np.float32).reshape(3, 2, 2)
path = workdir / "example.ssat"
save_tensor(t, path)
loaded = load_tensor(path)
print("round-trip is bit-identical:", loaded.tobytes() == t.tobytes())

# The container layout is tiny and fixed: magic, version, rank, dims, payload.
blob = path.read_bytes()
magic, version, rank = struct.unpack_from("<4sHH", blob)
dims = struct.unpack_from(f"<{rank}I", blob, 8)
print(f"header: magic={magic} version={version} rank={rank} dims={dims}")
print(f"file size = 8 + 4*{rank} + 4*{t.size} = {path.stat().st_size} bytes\n")

# --- 2. Reshape reinterprets the same row-major buffer --------------------

flat = reshape(t, [12])
print("reshape to rank-1 keeps element order:", flat.tolist())
print("round-trip reshape restores the original:",
      np.array_equal(reshape(flat, [3, 2, 2]), t), "\n")

# --- 3. Bilinear resize with half-pixel centers ----------------------------

small = np.array([[[0.0, 1.0], [2.0, 3.0]]], dtype=np.float32)
big = resize_bilinear(small, 4, 4)
print("2x2 channel upsampled to 4x4:")
print(np.round(big[0], 3))
print("resizing to the same size is an exact identity:",
      np.array_equal(resize_bilinear(small, 2, 2), small), "\n")

# --- 4. Min-max normalization ----------------------------------------------

scores = np.array([0.0, 5.0, 10.0], dtype=np.float32)
print("minmax_normalize([0, 5, 10]) ->", minmax_normalize(scores).tolist())
flat_map = np.full((2, 2), 3.3, dtype=np.float32)
print("a constant map normalizes to zeros:", minmax_normalize(flat_map).tolist())
