"""Prompt assembly: dense spatial grid, instance-peak clustering, final list.

The assembled prompt list is the handoff boundary to the external segmenter;
ordering and deduplication are fixed so the output file is byte-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .peaks import PeakPoint

PROMPT_KINDS = ("spatial", "instance", "semantic")

_DEDUP_SCALE = 1e6  # coordinates equal to 1e-6 collapse to one prompt


@dataclass(frozen=True)
class PromptPoint:
    x: float
    y: float
    kind: str
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in PROMPT_KINDS:
            raise ValueError(f"kind must be one of {PROMPT_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class GridParams:
    side: int = 32

    def __post_init__(self) -> None:
        if self.side < 1:
            raise ValueError(f"grid side must be >= 1, got {self.side}")


def dense_grid(image_width: float, image_height: float, side: int) -> list[PromptPoint]:
    """Centers of an side x side patch grid, row-major, kind=spatial."""
    if image_width <= 0 or image_height <= 0:
        raise ValueError(f"image size must be positive, got {image_width}x{image_height}")
    if side < 1:
        raise ValueError(f"grid side must be >= 1, got {side}")
    return [
        PromptPoint(
            x=(j + 0.5) * image_width / side,
            y=(i + 0.5) * image_height / side,
            kind="spatial",
            value=0.0,
        )
        for i in range(side)
        for j in range(side)
    ]


def cluster_instance_prompts(
    points: Sequence[PromptPoint], radius: float
) -> list[PromptPoint]:
    """Greedy value-descending radius clustering of instance prompts.

    Points are visited in descending value order (ties by (y, x)); a point is
    kept iff its distance to every already-kept point exceeds the radius.
    """
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    for p in points:
        if p.kind != "instance":
            raise ValueError(f"expected instance prompts only, found kind {p.kind!r}")
    ordered = sorted(points, key=lambda p: (-p.value, p.y, p.x))
    kept: list[PromptPoint] = []
    for p in ordered:
        if all(math.hypot(p.x - q.x, p.y - q.y) > radius for q in kept):
            kept.append(p)
    return kept


def assemble_prompts(
    spatial: Iterable[PromptPoint],
    instance_clustered: Iterable[PromptPoint],
    semantic: Iterable[PromptPoint],
) -> list[PromptPoint]:
    """Concatenate spatial ++ semantic ++ instance, dropping exact duplicates.

    Duplicates are points whose coordinates agree to 1e-6 (any kind); the
    first occurrence wins.
    """
    seen: set[tuple[int, int]] = set()
    out: list[PromptPoint] = []
    for p in [*spatial, *semantic, *instance_clustered]:
        key = (round(p.x * _DEDUP_SCALE), round(p.y * _DEDUP_SCALE))
        if key in seen:
            continue
        seen.add(key)
        out.append(p)
    return out


def map_peak_to_image(
    peak: "PeakPoint", map_size: tuple[int, int], image_size: tuple[int, int]
) -> tuple[float, float]:
    """Scale a peak's (row, col) map coordinate to image (x, y).

    Both sizes are (height, width). Identity when the map is already at image
    resolution; otherwise align-corners linear scaling. A size-1 map axis with
    a larger image axis has no defined scale and raises.
    """
    map_h, map_w = map_size
    img_h, img_w = image_size
    if not (0 <= peak.row < map_h and 0 <= peak.col < map_w):
        raise ValueError(
            f"peak ({peak.row}, {peak.col}) outside map of size {map_h}x{map_w}"
        )
    if (map_h, map_w) == (img_h, img_w):
        return float(peak.col), float(peak.row)
    if (map_w == 1 and img_w > 1) or (map_h == 1 and img_h > 1):
        raise ValueError(
            f"cannot scale size-1 map axis to image {img_h}x{img_w}: scale undefined"
        )
    x = 0.0 if img_w == 1 else peak.col * (img_w - 1) / (map_w - 1)
    y = 0.0 if img_h == 1 else peak.row * (img_h - 1) / (map_h - 1)
    return x, y
