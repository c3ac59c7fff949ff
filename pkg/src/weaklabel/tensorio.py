"""The WLT1 raw tensor container (bit-exact, little-endian):

    magic "WLT1" (4 bytes) | u32 rank r | r x u32 dims | row-major f32 payload
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

WLT1_MAGIC = b"WLT1"
_HEADER_FIXED = 8  # magic + rank
_MAX_RANK = 16


class TensorFormatError(ValueError):
    """Raised for malformed WLT1 files; messages carry byte offsets."""


def read_wlt1(path: str | Path) -> np.ndarray:
    """Read a WLT1 tensor file into a float32 array with its stored shape."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER_FIXED:
        raise TensorFormatError(
            f"{path}: truncated header, {len(raw)} bytes < {_HEADER_FIXED} (offset 0)"
        )
    if raw[:4] != WLT1_MAGIC:
        raise TensorFormatError(f"{path}: bad magic {raw[:4]!r} at offset 0")
    (rank,) = struct.unpack_from("<I", raw, 4)
    if rank == 0 or rank > _MAX_RANK:
        raise TensorFormatError(f"{path}: unsupported rank {rank} at offset 4")
    dims_end = _HEADER_FIXED + 4 * rank
    if len(raw) < dims_end:
        raise TensorFormatError(
            f"{path}: truncated dimension list at offset {_HEADER_FIXED}"
        )
    dims = struct.unpack_from(f"<{rank}I", raw, _HEADER_FIXED)
    for axis, d in enumerate(dims):
        if d == 0:
            raise TensorFormatError(f"{path}: dimension {axis} is zero")
    count = int(np.prod(dims, dtype=np.int64))
    expected = dims_end + 4 * count
    if len(raw) != expected:
        raise TensorFormatError(
            f"{path}: payload size mismatch, file has {len(raw)} bytes, "
            f"header {tuple(dims)} implies {expected}"
        )
    payload = np.frombuffer(raw, dtype="<f4", offset=dims_end, count=count)
    return payload.reshape(dims).copy()


def write_wlt1(path: str | Path, array: np.ndarray) -> None:
    """Write a float32 array as a WLT1 file (row-major)."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim == 0 or arr.ndim > _MAX_RANK:
        raise TensorFormatError(f"cannot write rank-{arr.ndim} tensor")
    header = WLT1_MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def payload_byte_offset(shape: Sequence[int], flat_index: int) -> int:
    """Byte offset of a payload element, for error reporting."""
    return _HEADER_FIXED + 4 * len(shape) + 4 * flat_index
