"""Adaptive pseudo ground truth generation from scored detector outputs.

Per image label: select that label's boxes, min-max normalize their scores,
keep boxes whose normalized score beats the score threshold, then keep a box
only if no other kept box of the class covers it past the overlap threshold
(intersection over self). Normalization makes the score threshold adaptive
per class, so a class is never lost just because all its raw scores are low.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .geometry import Box, ScoredBox, overlap_over_self


@dataclass(frozen=True)
class PgtParams:
    score_threshold: float = 0.3
    overlap_threshold: float = 0.85

    def __post_init__(self) -> None:
        if not 0.0 <= self.score_threshold < 1.0:
            raise ValueError(
                f"score_threshold must be in [0, 1), got {self.score_threshold}"
            )
        if not 0.0 < self.overlap_threshold <= 1.0:
            raise ValueError(
                f"overlap_threshold must be in (0, 1], got {self.overlap_threshold}"
            )


@dataclass(frozen=True)
class PgtBox:
    label: int
    box: Box
    normalized_score: float
    fallback: bool = False


def normalize_scores(scores: Sequence[float]) -> list[float]:
    """Min-max normalize scores to [0, 1]; a constant list maps to all 1.0."""
    if len(scores) == 0:
        raise ValueError("cannot normalize an empty score list")
    for s in scores:
        if not math.isfinite(s):
            raise ValueError(f"score is not finite: {s!r}")
    lo = min(scores)
    hi = max(scores)
    if hi == lo:
        return [1.0] * len(scores)
    return [(s - lo) / (hi - lo) for s in scores]


def adaptive_pgt(
    boxes: Sequence[ScoredBox],
    image_labels: Iterable[int],
    params: PgtParams,
    fallback: bool = True,
) -> list[PgtBox]:
    """Generate pseudo ground truth boxes per present image label.

    Boxes whose label is not in image_labels are ignored. Per label: scores
    are normalized, boxes with normalized score > score_threshold survive,
    and a survivor is emitted iff every other survivor covers it by less than
    overlap_threshold (intersection over self). If that filter empties a
    nonempty class and fallback is enabled, the class's highest-scoring
    survivor is emitted instead, flagged as a fallback.

    Output ordering: ascending label, then descending normalized score.
    """
    out: list[PgtBox] = []
    for label in sorted(set(int(y) for y in image_labels)):
        cls_boxes = [b for b in boxes if b.label == label]
        if not cls_boxes:
            continue
        norm = normalize_scores([b.score for b in cls_boxes])
        kept = [(b, s) for b, s in zip(cls_boxes, norm) if s > params.score_threshold]
        selected = []
        for j, (bj, sj) in enumerate(kept):
            overlaps = [
                overlap_over_self(bj.box, bk.box)
                for l, (bk, _) in enumerate(kept)
                if l != j
            ]
            if all(o < params.overlap_threshold for o in overlaps):
                selected.append(PgtBox(label=label, box=bj.box, normalized_score=sj))
        if not selected and kept and fallback:
            best_box, best_score = max(kept, key=lambda pair: pair[1])
            selected = [
                PgtBox(
                    label=label,
                    box=best_box.box,
                    normalized_score=best_score,
                    fallback=True,
                )
            ]
        selected.sort(key=lambda p: -p.normalized_score)
        out.extend(selected)
    return out


def top1_pgt(boxes: Sequence[ScoredBox], image_labels: Iterable[int]) -> list[PgtBox]:
    """Baseline: the single highest-raw-score box per present label."""
    out: list[PgtBox] = []
    for label in sorted(set(int(y) for y in image_labels)):
        cls_boxes = [b for b in boxes if b.label == label]
        if not cls_boxes:
            continue
        best = max(cls_boxes, key=lambda b: b.score)
        out.append(PgtBox(label=label, box=best.box, normalized_score=1.0))
    return out
