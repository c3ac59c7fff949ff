"""Independent brute-force references used to cross-check the library.

Everything here works on plain tuples/dicts and re-implements its own box and
distance arithmetic; nothing routes through the library code paths it checks.
"""

from __future__ import annotations

import math

import numpy as np


# ---------------------------------------------------------------------------
# peak extraction (candidates: per-tile max; then the literal sorted sweep
# with a delete list, threshold first, then distance <= k/2 suppression)


def tile_candidates_bruteforce(maps, k):
    """One (map_index, row, col, value) per k x k tile, first max in row-major."""
    out = []
    for m_idx, m in enumerate(maps):
        h, w = m.shape
        for r0 in range(0, h, k):
            for c0 in range(0, w, k):
                best = None
                for r in range(r0, min(r0 + k, h)):
                    for c in range(c0, min(c0 + k, w)):
                        v = float(m[r, c])
                        if best is None or v > best[3]:
                            best = (m_idx, r, c, v)
                out.append(best)
    return out


def extract_peaks_bruteforce(maps, k, tau):
    """Literal transliteration of the sorted sweep with a deletion list."""
    cands = tile_candidates_bruteforce(maps, k)
    cands.sort(key=lambda p: (-p[3], p[0], p[1], p[2]))
    n = len(cands)
    m_arr = np.array([c[0] for c in cands])
    r_arr = np.array([c[1] for c in cands], dtype=np.float64)
    c_arr = np.array([c[2] for c in cands], dtype=np.float64)
    deleted = np.zeros(n, dtype=bool)
    for i in range(n):
        if deleted[i]:
            continue
        if cands[i][3] < tau:
            deleted[i] = True
            continue
        if i + 1 < n:
            dist = np.sqrt(
                (r_arr[i + 1 :] - r_arr[i]) ** 2 + (c_arr[i + 1 :] - c_arr[i]) ** 2
            )
            near = (m_arr[i + 1 :] == m_arr[i]) & (dist <= k / 2)
            deleted[i + 1 :] |= near
    return [cands[i] for i in range(n) if not deleted[i]]


# ---------------------------------------------------------------------------
# adaptive pseudo ground truth (literal per-label normalize/filter/overlap
# pass, no fallback); boxes are dicts {label, x1, y1, x2, y2, score}


def _overlap_self_ref(a, b):
    self_area = (a["x2"] - a["x1"]) * (a["y2"] - a["y1"])
    if self_area <= 0.0:
        return 0.0
    iw = min(a["x2"], b["x2"]) - max(a["x1"], b["x1"])
    ih = min(a["y2"], b["y2"]) - max(a["y1"], b["y1"])
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return (iw * ih) / self_area


def adaptive_pgt_bruteforce(rows, labels, tau_s, tau_o):
    """Returns sorted (label, norm_score, x1, y1, x2, y2) tuples, no fallback."""
    out = []
    for y in sorted(set(labels)):
        cls = [r for r in rows if r["label"] == y]
        if not cls:
            continue
        scores = [r["score"] for r in cls]
        lo, hi = min(scores), max(scores)
        if hi == lo:
            norm = [1.0] * len(scores)
        else:
            norm = [(s - lo) / (hi - lo) for s in scores]
        kept = [(r, s) for r, s in zip(cls, norm) if s > tau_s]
        for j, (rj, sj) in enumerate(kept):
            overlaps = [
                _overlap_self_ref(rj, rk) for l, (rk, _) in enumerate(kept) if l != j
            ]
            if all(o < tau_o for o in overlaps):
                out.append((y, sj, rj["x1"], rj["y1"], rj["x2"], rj["y2"]))
    return sorted(out)


# ---------------------------------------------------------------------------
# geometry: pixel counting and an independent IoU on coordinate tuples


def pixel_count_intersection(a, b, canvas=32):
    """Shared unit cells of two integer boxes (x1, y1, x2, y2) on a canvas."""
    grid_a = np.zeros((canvas, canvas), dtype=bool)
    grid_b = np.zeros((canvas, canvas), dtype=bool)
    grid_a[a[1] : a[3], a[0] : a[2]] = True
    grid_b[b[1] : b[3], b[0] : b[2]] = True
    return int((grid_a & grid_b).sum())


def iou_ref(a, b):
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    inter = iw * ih if (iw > 0.0 and ih > 0.0) else 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return inter / union


# ---------------------------------------------------------------------------
# evaluation metrics on plain data:
#   proposals_by_image: {img: [(x1, y1, x2, y2), ...]}
#   gt_by_image:        {img: [(label, (x1, y1, x2, y2)), ...]}
#   dets_by_image:      {img: [(label, score, (x1, y1, x2, y2)), ...]}


def recall_ref(proposals_by_image, gt_by_image, threshold):
    total = 0
    matched = 0
    for img, gts in gt_by_image.items():
        props = proposals_by_image.get(img, [])
        for _, g in gts:
            total += 1
            if any(iou_ref(p, g) >= threshold for p in props):
                matched += 1
    return matched / total if total else 0.0


def corloc_ref(dets_by_image, gt_by_image, threshold=0.5):
    per_class = {}
    for img, gts in gt_by_image.items():
        for label in sorted(set(l for l, _ in gts)):
            cls_dets = [d for d in dets_by_image.get(img, []) if d[0] == label]
            correct = False
            if cls_dets:
                best = None
                for d in cls_dets:
                    if best is None or d[1] > best[1]:
                        best = d
                correct = any(
                    iou_ref(best[2], g) >= threshold for l, g in gts if l == label
                )
            per_class.setdefault(label, []).append(correct)
    means = [sum(v) / len(v) for _, v in sorted(per_class.items())]
    return sum(means) / len(means)


def pgt_error_ref(pgt_by_image, gt_by_image, threshold):
    """pgt_by_image: {img: [(label, (x1, y1, x2, y2)), ...]}"""
    total = 0
    errors = 0
    for img, pgts in pgt_by_image.items():
        gts = gt_by_image.get(img, [])
        for label, p in pgts:
            total += 1
            hit = any(l == label and iou_ref(p, g) >= threshold for l, g in gts)
            if not hit:
                errors += 1
    return errors / total if total else None


def euclid(p, q):
    return math.dist(p, q)
