"""Test shim replacing the external segmenter + detector in pipeline runs.

Each prompt becomes a fixed-size box centered on it, clipped to the image.
Labels cycle through the image's label set and scores come from a
multiplicative hash of the prompt index, so outputs are fully deterministic
yet varied enough to exercise the downstream score normalization.
"""

from __future__ import annotations

from typing import Sequence

from .geometry import Box, ScoredBox
from .prompts import PromptPoint

_KNUTH = 2654435761


def _hash_fraction(i: int) -> float:
    return ((i * _KNUTH) & 0xFFFFFFFF) / 2**32


def prompts_to_boxes(
    prompts: Sequence[PromptPoint],
    image_width: float,
    image_height: float,
    box_size: float = 64.0,
    labels: Sequence[int] = (0,),
) -> list[ScoredBox]:
    if box_size <= 0:
        raise ValueError(f"box_size must be > 0, got {box_size}")
    if not labels:
        raise ValueError("labels must be nonempty")
    half = box_size / 2.0
    out = []
    for i, p in enumerate(prompts):
        x1 = min(max(p.x - half, 0.0), image_width)
        x2 = min(max(p.x + half, 0.0), image_width)
        y1 = min(max(p.y - half, 0.0), image_height)
        y2 = min(max(p.y + half, 0.0), image_height)
        out.append(
            ScoredBox(
                label=int(labels[i % len(labels)]),
                box=Box(x1, y1, x2, y2),
                score=_hash_fraction(i),
            )
        )
    return out
