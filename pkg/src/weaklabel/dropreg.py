"""Keep/drop masks over RoIs and queries, and the masked loss aggregates.

High-loss samples mostly correspond to noisy pseudo-GT instances, so their
loss contribution is zeroed: RoIs are dropped by fixed per-loss thresholds,
queries by a percentile of batch-normalized classification loss (foreground
only by default; dropping background queries slows convergence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

DROP_SCOPES = ("things", "both")


def _check_loss(value: float, name: str) -> None:
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class RoiLossRecord:
    cls_loss: float
    reg_loss: float
    is_positive: bool

    def __post_init__(self) -> None:
        _check_loss(self.cls_loss, "cls_loss")
        _check_loss(self.reg_loss, "reg_loss")


@dataclass(frozen=True)
class QueryLossRecord:
    cls_loss: float
    box_loss: float = 0.0
    iou_loss: float = 0.0
    is_foreground: bool = False

    def __post_init__(self) -> None:
        _check_loss(self.cls_loss, "cls_loss")
        _check_loss(self.box_loss, "box_loss")
        _check_loss(self.iou_loss, "iou_loss")


@dataclass(frozen=True)
class DropParams:
    tau_cls: float = 4.0
    tau_reg: float = 1.0
    percentile: float = 90.0
    lam: float = 1.0

    def __post_init__(self) -> None:
        if self.tau_cls < 0 or self.tau_reg < 0:
            raise ValueError("loss thresholds must be >= 0")
        if not 0.0 < self.percentile <= 100.0:
            raise ValueError(f"percentile must be in (0, 100], got {self.percentile}")
        if self.lam < 0:
            raise ValueError(f"balancing weight must be >= 0, got {self.lam}")


def roi_drop_mask(records: Sequence[RoiLossRecord], params: DropParams) -> list[int]:
    """Keep a RoI iff both its losses are at or below their thresholds."""
    return [
        1 if (r.cls_loss <= params.tau_cls and r.reg_loss <= params.tau_reg) else 0
        for r in records
    ]


def roi_masked_loss(
    records: Sequence[RoiLossRecord], mask: Sequence[int], lam: float = 1.0
) -> float:
    """Masked sum: sum_i d_i*l_cls + lam * sum_i p*_i*d_i*l_reg."""
    if len(mask) != len(records):
        raise ValueError(f"mask length {len(mask)} != record count {len(records)}")
    cls_total = sum(d * r.cls_loss for r, d in zip(records, mask))
    reg_total = sum(d * r.reg_loss for r, d in zip(records, mask) if r.is_positive)
    return cls_total + lam * reg_total


def batch_normalize_query_losses(records: Sequence[QueryLossRecord]) -> list[float]:
    """Min-max normalize classification losses per foreground/background group.

    Normalization runs over the whole batch, separately within the foreground
    group and the background group; a constant group maps to all 1.0.
    """
    if len(records) == 0:
        raise ValueError("cannot normalize an empty batch")
    out = [0.0] * len(records)
    for flag in (True, False):
        idx = [i for i, r in enumerate(records) if r.is_foreground == flag]
        if not idx:
            continue
        losses = [records[i].cls_loss for i in idx]
        lo = min(losses)
        hi = max(losses)
        if hi == lo:
            for i in idx:
                out[i] = 1.0
        else:
            for i in idx:
                out[i] = (records[i].cls_loss - lo) / (hi - lo)
    return out


def percentile_rank(percentile: float, n: int) -> int:
    """Nearest-rank index (1-based): ceil(percentile/100 * n)."""
    return max(1, math.ceil(percentile * n / 100.0))


def query_drop_mask(
    normalized_losses: Sequence[float],
    foreground_flags: Sequence[bool],
    percentile: float,
    scope: str = "things",
) -> list[int]:
    """Keep queries whose normalized loss is at or below the percentile cut.

    The cut is the nearest-rank percentile of the foreground group's losses;
    background queries are always kept under scope="things". scope="both"
    additionally thresholds background queries against their own group's
    percentile cut. With no queries in a group, that group is kept whole.
    """
    if len(normalized_losses) != len(foreground_flags):
        raise ValueError("losses and flags length mismatch")
    if not 0.0 < percentile <= 100.0:
        raise ValueError(f"percentile must be in (0, 100], got {percentile}")
    if scope not in DROP_SCOPES:
        raise ValueError(f"scope must be one of {DROP_SCOPES}, got {scope!r}")
    mask = [1] * len(normalized_losses)
    groups = [True] if scope == "things" else [True, False]
    for flag in groups:
        idx = [i for i, f in enumerate(foreground_flags) if f == flag]
        if not idx:
            continue
        losses = sorted(normalized_losses[i] for i in idx)
        cut = losses[percentile_rank(percentile, len(idx)) - 1]
        for i in idx:
            mask[i] = 1 if normalized_losses[i] <= cut else 0
    return mask


def hungarian_masked_loss(
    records: Sequence[QueryLossRecord], mask: Sequence[int]
) -> float:
    """Masked sum: sum_i d_i * (l_cls + p*_i*l_box + p*_i*l_iou), raw losses."""
    if len(mask) != len(records):
        raise ValueError(f"mask length {len(mask)} != record count {len(records)}")
    total = 0.0
    for r, d in zip(records, mask):
        if not d:
            continue
        term = r.cls_loss
        if r.is_foreground:
            term += r.box_loss + r.iou_loss
        total += term
    return total


@dataclass(frozen=True)
class LossBin:
    lower: float
    upper: float
    count: int
    error_rate: float | None  # None when the bin is empty


def loss_interval_stats(
    losses: Sequence[float], error_flags: Sequence[bool], bin_count: int
) -> list[LossBin]:
    """Histogram of min-max-normalized losses with per-bin error fraction.

    [0, 1] splits into bin_count equal intervals, the last one closed. A
    constant loss list normalizes to all 1.0 (everything in the last bin).
    """
    if len(losses) != len(error_flags):
        raise ValueError("losses and error flags length mismatch")
    if bin_count < 1:
        raise ValueError(f"bin_count must be >= 1, got {bin_count}")
    counts = [0] * bin_count
    errors = [0] * bin_count
    if losses:
        lo = min(losses)
        hi = max(losses)
        for loss, flagged in zip(losses, error_flags):
            v = 1.0 if hi == lo else (loss - lo) / (hi - lo)
            b = min(int(v * bin_count), bin_count - 1)
            counts[b] += 1
            if flagged:
                errors[b] += 1
    return [
        LossBin(
            lower=b / bin_count,
            upper=(b + 1) / bin_count,
            count=counts[b],
            error_rate=(errors[b] / counts[b]) if counts[b] else None,
        )
        for b in range(bin_count)
    ]
