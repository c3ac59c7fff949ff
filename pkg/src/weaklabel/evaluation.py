"""Box-level quality metrics: proposal recall, CorLoc, PGT error rate, and
proposal-feature cosine similarity.

Recall is class-agnostic (proposals carry no labels before detection); the
PGT error rate and CorLoc are class-aware. All box matching uses continuous
IoU from the geometry module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .geometry import Box, ScoredBox, iou


@dataclass(frozen=True)
class GtBox:
    label: int
    box: Box
    image_id: str = ""


@dataclass(frozen=True)
class RecallReport:
    iou_threshold: float
    recall: float
    avg_proposals_per_image: float


def recall_at_iou(
    proposals_by_image: Mapping[str, Sequence[Box]],
    gt_by_image: Mapping[str, Sequence[GtBox]],
    threshold: float,
) -> RecallReport:
    """Fraction of GT boxes covered by at least one proposal at IoU >= threshold.

    GT is pooled over all images; a GT box may be matched by any number of
    proposals (coverage, not assignment). Images absent from the proposal
    mapping contribute zero matches. With no GT boxes at all, recall is 0.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    total = 0
    matched = 0
    for image_id, gts in gt_by_image.items():
        props = proposals_by_image.get(image_id, ())
        for g in gts:
            total += 1
            if any(iou(p, g.box) >= threshold for p in props):
                matched += 1
    image_ids = set(gt_by_image) | set(proposals_by_image)
    n_props = sum(len(proposals_by_image.get(i, ())) for i in image_ids)
    avg = n_props / len(image_ids) if image_ids else 0.0
    return RecallReport(
        iou_threshold=threshold,
        recall=(matched / total) if total else 0.0,
        avg_proposals_per_image=avg,
    )


def corloc(
    detections_by_image: Mapping[str, Sequence[ScoredBox]],
    gt_by_image: Mapping[str, Sequence[GtBox]],
    iou_threshold: float = 0.5,
) -> float:
    """Correct-localization rate, averaged per class then over classes.

    For every (image, class) pair with that class present in the image's GT,
    the pair is correct iff the class's top-scoring detection in that image
    reaches the IoU threshold against some same-class GT box. Pairs with no
    detection for the class count as incorrect; classes that never appear in
    GT are excluded.
    """
    per_class: dict[int, list[bool]] = {}
    for image_id, gts in gt_by_image.items():
        present = sorted(set(g.label for g in gts))
        dets = detections_by_image.get(image_id, ())
        for label in present:
            cls_dets = [d for d in dets if d.label == label]
            correct = False
            if cls_dets:
                top = max(cls_dets, key=lambda d: d.score)
                correct = any(
                    iou(top.box, g.box) >= iou_threshold
                    for g in gts
                    if g.label == label
                )
            per_class.setdefault(label, []).append(correct)
    if not per_class:
        raise ValueError("no (image, class) pairs in ground truth")
    class_means = [sum(v) / len(v) for _, v in sorted(per_class.items())]
    return sum(class_means) / len(class_means)


def pgt_error_rate(
    pgt_by_image: Mapping[str, Sequence],
    gt_by_image: Mapping[str, Sequence[GtBox]],
    iou_threshold: float = 0.7,
) -> float | None:
    """Fraction of PGT boxes with no same-class GT match at the IoU threshold.

    PGT entries need .label and .box attributes (PgtBox, ScoredBox, GtBox all
    qualify). Returns None when there are no PGT boxes.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    total = 0
    errors = 0
    for image_id, pgts in pgt_by_image.items():
        gts = gt_by_image.get(image_id, ())
        for p in pgts:
            total += 1
            ok = any(
                g.label == p.label and iou(p.box, g.box) >= iou_threshold for g in gts
            )
            if not ok:
                errors += 1
    if total == 0:
        return None
    return errors / total


def feature_cosine_similarity(
    features: np.ndarray, sample_size: int, seed: int
) -> tuple[np.ndarray, dict]:
    """Pairwise cosine similarity of a seeded random sample of feature rows.

    Zero vectors get similarity 0 against everything (themselves included);
    for nonzero vectors the diagonal is exactly 1. Returns the sampled
    similarity matrix and a summary with the mean off-diagonal similarity and
    a 20-bin histogram over [-1, 1].
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError(f"features must be a nonempty (M, D) array, got {feats.shape}")
    m = feats.shape[0]
    if not 1 <= sample_size <= m:
        raise ValueError(f"sample_size must be in [1, {m}], got {sample_size}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(m, size=sample_size, replace=False)
    sample = feats[idx]
    norms = np.linalg.norm(sample, axis=1)
    nonzero = norms > 0.0
    unit = np.zeros_like(sample)
    unit[nonzero] = sample[nonzero] / norms[nonzero, None]
    sim = unit @ unit.T
    np.fill_diagonal(sim, np.where(nonzero, 1.0, 0.0))
    off = sim[~np.eye(sample_size, dtype=bool)]
    edges = np.linspace(-1.0, 1.0, 21)
    hist, _ = np.histogram(off, bins=edges)
    summary = {
        "sample_size": int(sample_size),
        "mean_offdiag": (float(off.mean()) if off.size else None),
        "histogram": {
            "bin_edges": [float(e) for e in edges],
            "counts": [int(c) for c in hist],
        },
    }
    return sim, summary
