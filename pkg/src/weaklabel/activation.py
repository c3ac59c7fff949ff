"""Ingest and prepare activation map stacks (cross-attention maps and CAMs).

Source tensors arrive as WLT1 files with arbitrary leading dimensions and the
two trailing dimensions spatial. Loading collapses the leading dimensions into
a stack of 2-D maps; the stack can then be reshaped to a different grid side,
resized to image resolution, and min-max normalized per map so a single
activation threshold is meaningful across heterogeneous sources.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import tensorio

SOURCE_KINDS = ("cross_attention", "coarse_cam", "fine_cam")


@dataclass(frozen=True)
class ActivationStack:
    """M stacked 2-D maps of identical size, all values finite."""

    maps: np.ndarray  # (M, height, width), float64
    origin: str | None = None
    category_ids: tuple[int, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.maps.ndim != 3:
            raise ValueError(f"stack must be (M, H, W), got shape {self.maps.shape}")
        if self.maps.shape[1] < 1 or self.maps.shape[2] < 1:
            raise ValueError(f"maps must be non-empty, got shape {self.maps.shape}")
        if not np.isfinite(self.maps).all():
            bad = int(np.flatnonzero(~np.isfinite(self.maps))[0])
            raise ValueError(f"non-finite value at flat index {bad}")

    def __len__(self) -> int:
        return self.maps.shape[0]

    @property
    def height(self) -> int:
        return self.maps.shape[1]

    @property
    def width(self) -> int:
        return self.maps.shape[2]


def load_tensor(path: str | Path, origin: str | None = None) -> ActivationStack:
    """Load a WLT1 tensor as a map stack.

    The product of all leading dimensions becomes the stack size M; the two
    trailing dimensions become (height, width). Raises for malformed files,
    rank < 2, and non-finite payload values (the error names the byte offset).
    """
    arr = tensorio.read_wlt1(path)
    if arr.ndim < 2:
        raise tensorio.TensorFormatError(
            f"{path}: need rank >= 2 for a map stack, got rank {arr.ndim}"
        )
    finite = np.isfinite(arr)
    if not finite.all():
        idx = int(np.flatnonzero(~finite.ravel())[0])
        offset = tensorio.payload_byte_offset(arr.shape, idx)
        raise tensorio.TensorFormatError(
            f"{path}: non-finite value at flat index {idx} (byte offset {offset})"
        )
    h, w = arr.shape[-2], arr.shape[-1]
    maps = arr.reshape(-1, h, w).astype(np.float64)
    return ActivationStack(maps=maps, origin=origin)


def reshape_to_maps(stack: ActivationStack, n: int) -> ActivationStack:
    """Re-view the stack payload as M maps of n x n, row-major order kept."""
    if n < 1:
        raise ValueError(f"grid side must be >= 1, got {n}")
    total = stack.maps.size
    if total % (n * n) != 0:
        raise ValueError(f"element count {total} not divisible by {n}x{n}")
    return replace(stack, maps=stack.maps.reshape(-1, n, n))


def _resize_bilinear(m: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    # Align-corners: grid extremes map to image extremes, so peak pixel
    # coordinates translate without half-pixel drift.
    in_h, in_w = m.shape
    if (in_h, in_w) == (out_h, out_w):
        return m.copy()
    ys = np.linspace(0.0, float(in_h - 1), out_h)
    xs = np.linspace(0.0, float(in_w - 1), out_w)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = m[np.ix_(y0, x0)]
    top = top + wx * (m[np.ix_(y0, x1)] - top)
    bot = m[np.ix_(y1, x0)]
    bot = bot + wx * (m[np.ix_(y1, x1)] - bot)
    return top + wy * (bot - top)


def resize_to_image(
    stack: ActivationStack, image_width: int, image_height: int
) -> ActivationStack:
    """Bilinearly resize every map to image_height x image_width."""
    if image_width < 1 or image_height < 1:
        raise ValueError(f"target size must be positive, got {image_width}x{image_height}")
    if (stack.height, stack.width) == (image_height, image_width):
        return replace(stack, maps=stack.maps.copy())
    out = np.empty((len(stack), image_height, image_width), dtype=np.float64)
    for i in range(len(stack)):
        out[i] = _resize_bilinear(stack.maps[i], image_height, image_width)
    return replace(stack, maps=out)


def normalize_map(m: np.ndarray) -> np.ndarray:
    """Min-max normalize a single map to [0, 1]; constant maps become zeros."""
    lo = float(m.min())
    hi = float(m.max())
    if hi == lo:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)


def normalize_stack(stack: ActivationStack) -> ActivationStack:
    out = np.empty_like(stack.maps)
    for i in range(len(stack)):
        out[i] = normalize_map(stack.maps[i])
    return replace(stack, maps=out)
