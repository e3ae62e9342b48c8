"""Writer for the MSRD tensor container.

Layout: magic "MSRD", version 1, dtype code 1 (float32 LE), rank byte,
rank x u32 LE dims outermost first, then the row-major float payload.
Kept self-contained so this package only shares the wire format with the
consumer toolkit, not code.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"MSRD"
VERSION = 1
DTYPE_FLOAT32 = 1


def write_tensor(arr, path) -> None:
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    if arr.ndim not in (2, 3):
        raise ValueError(f"tensor rank must be 2 or 3, got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains non-finite values")
    with open(path, "wb") as f:
        f.write(MAGIC + bytes([VERSION, DTYPE_FLOAT32, arr.ndim]))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(arr.astype("<f4", copy=False).tobytes())
