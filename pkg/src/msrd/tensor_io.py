"""Dense float32 tensors and the bit-exact MSRD on-disk container.

Container layout (all little-endian):

    bytes 0-3   magic ``4D 53 52 44`` ("MSRD")
    byte  4     format version (1)
    byte  5     dtype code (1 = float32 LE)
    byte  6     rank (2 or 3)
    then        rank x u32 dims, outermost first (K, H, W)
    then        payload floats, row-major, innermost index fastest

No trailing bytes are allowed; two writes of equal tensors produce
byte-identical files.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MSRD"
VERSION = 1
DTYPE_FLOAT32 = 1

_FIXED_HEADER = struct.Struct("<4sBBB")


class FormatError(ValueError):
    """Malformed container header (magic, version, dtype, rank or dims)."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class TruncationError(FormatError):
    """Declared shape and actual payload length disagree."""


class ValidationError(ValueError):
    """Data violates a tensor or manifest invariant."""


def validate_tensor(arr) -> np.ndarray:
    """Check the tensor invariants: rank 2/3, positive dims, finite values."""
    arr = np.asarray(arr)
    if arr.ndim not in (2, 3):
        raise ValidationError(f"tensor rank must be 2 or 3, got {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise ValidationError(f"tensor dims must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("tensor contains non-finite values")
    return arr


def write_tensor(t, path) -> None:
    """Write a float32 tensor in the canonical container encoding."""
    t = validate_tensor(t)
    if t.dtype != np.float32:
        raise ValidationError(f"tensor dtype must be float32, got {t.dtype}")
    with open(path, "wb") as f:
        f.write(_FIXED_HEADER.pack(MAGIC, VERSION, DTYPE_FLOAT32, t.ndim))
        f.write(struct.pack(f"<{t.ndim}I", *t.shape))
        f.write(np.ascontiguousarray(t).astype("<f4", copy=False).tobytes())


def _parse_header(data: bytes) -> tuple[tuple[int, ...], int]:
    """Parse and validate the header; return (shape, payload offset)."""
    if len(data) < _FIXED_HEADER.size:
        raise TruncationError("file shorter than the fixed header", len(data))
    magic, version, dtype, rank = _FIXED_HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    if dtype != DTYPE_FLOAT32:
        raise FormatError(f"unsupported dtype code {dtype}", 5)
    if rank not in (2, 3):
        raise FormatError(f"rank must be 2 or 3, got {rank}", 6)
    payload_offset = _FIXED_HEADER.size + 4 * rank
    if len(data) < payload_offset:
        raise TruncationError("dim table truncated", len(data))
    shape = struct.unpack_from(f"<{rank}I", data, _FIXED_HEADER.size)
    for axis, dim in enumerate(shape):
        if dim == 0:
            raise FormatError(f"zero-sized dim on axis {axis}", _FIXED_HEADER.size + 4 * axis)
    return shape, payload_offset


def read_tensor(path) -> np.ndarray:
    """Read a container file; byte-exact inverse of write_tensor."""
    data = Path(path).read_bytes()
    shape, payload_offset = _parse_header(data)
    count = math.prod(shape)
    expected = payload_offset + 4 * count
    if len(data) != expected:
        raise TruncationError(
            f"payload length mismatch: header declares {count} floats "
            f"({expected} bytes total), file has {len(data)} bytes",
            min(len(data), payload_offset),
        )
    arr = np.frombuffer(data, dtype="<f4", offset=payload_offset).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"payload of {path} contains non-finite values")
    return arr


def read_tensor_header(path) -> tuple[int, ...]:
    """Read only the declared shape; cheap shape-agreement checks."""
    with open(path, "rb") as f:
        prefix = f.read(_FIXED_HEADER.size + 4 * 3)
    shape, _ = _parse_header(prefix)
    return tuple(shape)
