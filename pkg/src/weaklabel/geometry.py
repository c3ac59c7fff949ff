"""Axis-aligned box arithmetic shared by pseudo-GT generation and evaluation.

Boxes are continuous rectangles [x1, x2] x [y1, y2] in pixel units, origin
top-left. Area is (x2 - x1) * (y2 - y1) with no +1 pixel convention, so a
degenerate box has zero area and fractional coordinates are fine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Box:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for name in ("x1", "y1", "x2", "y2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"box coordinate {name} is not finite: {v!r}")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise ValueError(
                f"box corners out of order: ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    def translate(self, dx: float, dy: float) -> "Box":
        return Box(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)


@dataclass(frozen=True)
class ScoredBox:
    """A detector prediction: category label, box, raw confidence score."""

    label: int
    box: Box
    score: float

    def __post_init__(self) -> None:
        if self.label < 0:
            raise ValueError(f"label must be >= 0, got {self.label}")
        if not math.isfinite(self.score):
            raise ValueError(f"score is not finite: {self.score!r}")


def area(b: Box) -> float:
    """Area of a box; zero for degenerate boxes."""
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def intersection_area(a: Box, b: Box) -> float:
    """Area of the overlapping rectangle, 0 when disjoint."""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def iou(a: Box, b: Box) -> float:
    """Intersection over union in [0, 1]; 0 when the union has zero area."""
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def overlap_over_self(b_j: Box, b_k: Box) -> float:
    """Fraction of b_j covered by b_k: |b_j n b_k| / |b_j|.

    Asymmetric containment ratio; 0 when b_j is degenerate.
    """
    a_j = area(b_j)
    if a_j <= 0.0:
        return 0.0
    return intersection_area(b_j, b_k) / a_j
