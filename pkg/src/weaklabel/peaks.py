"""Peak point extraction from activation map stacks.

Candidates come from non-overlapping k x k max pooling (one argmax per tile,
edge tiles truncated). Candidates are then sorted by value, thresholded, and
greedily suppressed: a surviving point removes every lower-valued point of the
same map within Euclidean distance k/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activation import ActivationStack
from .prompts import PromptPoint

PROMPTABLE_KINDS = ("instance", "semantic")


@dataclass(frozen=True)
class PeakPoint:
    row: int
    col: int
    value: float
    map_index: int


@dataclass(frozen=True)
class PeakParams:
    kernel_size: int = 128
    activation_threshold: float = 0.9

    def __post_init__(self) -> None:
        if self.kernel_size < 1:
            raise ValueError(f"kernel_size must be >= 1, got {self.kernel_size}")
        if not 0.0 <= self.activation_threshold <= 1.0:
            raise ValueError(
                f"activation_threshold must be in [0, 1], got {self.activation_threshold}"
            )


def pool_candidates(stack: ActivationStack, kernel_size: int) -> list[PeakPoint]:
    """One candidate per k x k tile: the tile argmax (first in row-major on ties)."""
    k = int(kernel_size)
    if k < 1:
        raise ValueError(f"kernel_size must be >= 1, got {k}")
    if len(stack) == 0:
        raise ValueError("empty stack")
    out: list[PeakPoint] = []
    for map_index in range(len(stack)):
        m = stack.maps[map_index]
        h, w = m.shape
        pad_h = (-h) % k
        pad_w = (-w) % k
        if pad_h or pad_w:
            # -inf padding never wins an argmax and keeps row-major tie order
            m = np.pad(m, ((0, pad_h), (0, pad_w)), constant_values=-np.inf)
        th = m.shape[0] // k
        tw = m.shape[1] // k
        tiles = m.reshape(th, k, tw, k).transpose(0, 2, 1, 3).reshape(th, tw, k * k)
        flat = tiles.argmax(axis=2)
        vals = np.take_along_axis(tiles, flat[..., None], axis=2)[..., 0]
        rows = np.arange(th)[:, None] * k + flat // k
        cols = np.arange(tw)[None, :] * k + flat % k
        for tr in range(th):
            for tc in range(tw):
                out.append(
                    PeakPoint(
                        row=int(rows[tr, tc]),
                        col=int(cols[tr, tc]),
                        value=float(vals[tr, tc]),
                        map_index=map_index,
                    )
                )
    return out


def extract_peaks(stack: ActivationStack, params: PeakParams) -> list[PeakPoint]:
    """Threshold and suppress pooled candidates.

    Returns peaks sorted by descending value (ties by map_index, row, col).
    Points below the activation threshold are dropped; each kept point then
    removes every later same-map point within Euclidean distance k/2. Maps in
    the stack never suppress each other.
    """
    k = params.kernel_size
    tau = params.activation_threshold
    cands = pool_candidates(stack, k)
    cands.sort(key=lambda p: (-p.value, p.map_index, p.row, p.col))
    kept: list[PeakPoint] = []
    kept_coords: dict[int, list[tuple[int, int]]] = {}
    k_sq = k * k  # compare 4*d^2 <= k^2 in exact integer arithmetic
    for p in cands:
        if p.value < tau:
            break  # sorted descending: everything after is below threshold too
        coords = kept_coords.get(p.map_index)
        if coords:
            arr = np.asarray(coords, dtype=np.int64)
            d_sq = (arr[:, 0] - p.row) ** 2 + (arr[:, 1] - p.col) ** 2
            if bool((4 * d_sq <= k_sq).any()):
                continue
        kept.append(p)
        kept_coords.setdefault(p.map_index, []).append((p.row, p.col))
    return kept


def peaks_to_prompts(peaks: list[PeakPoint], kind: str) -> list[PromptPoint]:
    """Tag image-resolution peaks as prompt points of the given kind."""
    if kind not in PROMPTABLE_KINDS:
        raise ValueError(f"kind must be one of {PROMPTABLE_KINDS}, got {kind!r}")
    return [
        PromptPoint(x=float(p.col), y=float(p.row), kind=kind, value=p.value)
        for p in peaks
    ]
