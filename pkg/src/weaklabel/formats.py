"""JSON schemas shared by the CLI stages, plus re-exported WLT1 tensor I/O.

JSON files are written canonically (sorted keys, 2-space indent, trailing
newline) so that identical inputs always produce byte-identical outputs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Mapping

from .dropreg import QueryLossRecord, RoiLossRecord
from .evaluation import GtBox
from .geometry import Box, ScoredBox
from .peaks import PeakPoint
from .pgt import PgtBox
from .prompts import PromptPoint
from .tensorio import (  # noqa: F401  (re-exported)
    WLT1_MAGIC,
    TensorFormatError,
    payload_byte_offset,
    read_wlt1,
    write_wlt1,
)

# ---------------------------------------------------------------------------
# canonical JSON


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def dump_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps_canonical(obj), encoding="utf-8")


def load_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _require(obj: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in obj:
        raise ValueError(f"{where}: missing field '{key}'")
    return obj[key]


# ---------------------------------------------------------------------------
# box lists: [{label, x1, y1, x2, y2, score?}]; score omitted for ground truth


def scored_box_to_obj(b: ScoredBox) -> dict:
    return {
        "label": int(b.label),
        "x1": float(b.box.x1),
        "y1": float(b.box.y1),
        "x2": float(b.box.x2),
        "y2": float(b.box.y2),
        "score": float(b.score),
    }


def scored_box_from_obj(obj: Mapping[str, Any], where: str = "box") -> ScoredBox:
    box = Box(
        float(_require(obj, "x1", where)),
        float(_require(obj, "y1", where)),
        float(_require(obj, "x2", where)),
        float(_require(obj, "y2", where)),
    )
    return ScoredBox(int(_require(obj, "label", where)), box, float(_require(obj, "score", where)))


def box_from_obj(obj: Mapping[str, Any], where: str = "box") -> Box:
    """Coordinates only; label and score, if present, are ignored."""
    return Box(
        float(_require(obj, "x1", where)),
        float(_require(obj, "y1", where)),
        float(_require(obj, "x2", where)),
        float(_require(obj, "y2", where)),
    )


def gt_box_to_obj(g: GtBox) -> dict:
    return {
        "label": int(g.label),
        "x1": float(g.box.x1),
        "y1": float(g.box.y1),
        "x2": float(g.box.x2),
        "y2": float(g.box.y2),
    }


def gt_box_from_obj(obj: Mapping[str, Any], image_id: str = "", where: str = "gt box") -> GtBox:
    box = Box(
        float(_require(obj, "x1", where)),
        float(_require(obj, "y1", where)),
        float(_require(obj, "x2", where)),
        float(_require(obj, "y2", where)),
    )
    return GtBox(int(_require(obj, "label", where)), box, image_id)


def load_scored_boxes(path: str | Path) -> list[ScoredBox]:
    data = load_json(path)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of boxes")
    return [scored_box_from_obj(o, where=f"{path}[{i}]") for i, o in enumerate(data)]


def save_scored_boxes(path: str | Path, boxes: Iterable[ScoredBox]) -> None:
    dump_json(path, [scored_box_to_obj(b) for b in boxes])


def load_gt_boxes(path: str | Path, image_id: str = "") -> list[GtBox]:
    data = load_json(path)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of ground-truth boxes")
    return [gt_box_from_obj(o, image_id, where=f"{path}[{i}]") for i, o in enumerate(data)]


def save_gt_boxes(path: str | Path, boxes: Iterable[GtBox]) -> None:
    dump_json(path, [gt_box_to_obj(b) for b in boxes])


# ---------------------------------------------------------------------------
# peaks: [{map_index, row, col, value}]


def peak_to_obj(p: PeakPoint) -> dict:
    return {
        "map_index": int(p.map_index),
        "row": int(p.row),
        "col": int(p.col),
        "value": float(p.value),
    }


def peak_from_obj(obj: Mapping[str, Any], where: str = "peak") -> PeakPoint:
    return PeakPoint(
        row=int(_require(obj, "row", where)),
        col=int(_require(obj, "col", where)),
        value=float(_require(obj, "value", where)),
        map_index=int(_require(obj, "map_index", where)),
    )


def load_peaks(path: str | Path) -> list[PeakPoint]:
    data = load_json(path)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of peaks")
    return [peak_from_obj(o, where=f"{path}[{i}]") for i, o in enumerate(data)]


def save_peaks(path: str | Path, peaks: Iterable[PeakPoint]) -> None:
    dump_json(path, [peak_to_obj(p) for p in peaks])


# ---------------------------------------------------------------------------
# prompts: [{x, y, kind, value}]


def prompt_to_obj(p: PromptPoint) -> dict:
    return {"x": float(p.x), "y": float(p.y), "kind": p.kind, "value": float(p.value)}


def prompt_from_obj(obj: Mapping[str, Any], where: str = "prompt") -> PromptPoint:
    return PromptPoint(
        x=float(_require(obj, "x", where)),
        y=float(_require(obj, "y", where)),
        kind=str(_require(obj, "kind", where)),
        value=float(obj.get("value", 0.0)),
    )


def load_prompts(path: str | Path) -> list[PromptPoint]:
    data = load_json(path)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of prompts")
    return [prompt_from_obj(o, where=f"{path}[{i}]") for i, o in enumerate(data)]


def save_prompts(path: str | Path, prompts: Iterable[PromptPoint]) -> None:
    dump_json(path, [prompt_to_obj(p) for p in prompts])


# ---------------------------------------------------------------------------
# pseudo ground truth: [{label, x1, y1, x2, y2, normalized_score, fallback}]


def pgt_box_to_obj(p: PgtBox) -> dict:
    return {
        "label": int(p.label),
        "x1": float(p.box.x1),
        "y1": float(p.box.y1),
        "x2": float(p.box.x2),
        "y2": float(p.box.y2),
        "normalized_score": float(p.normalized_score),
        "fallback": bool(p.fallback),
    }


def pgt_box_from_obj(obj: Mapping[str, Any], where: str = "pgt box") -> PgtBox:
    box = Box(
        float(_require(obj, "x1", where)),
        float(_require(obj, "y1", where)),
        float(_require(obj, "x2", where)),
        float(_require(obj, "y2", where)),
    )
    return PgtBox(
        label=int(_require(obj, "label", where)),
        box=box,
        normalized_score=float(_require(obj, "normalized_score", where)),
        fallback=bool(obj.get("fallback", False)),
    )


def load_pgt_boxes(path: str | Path) -> list[PgtBox]:
    data = load_json(path)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of PGT boxes")
    return [pgt_box_from_obj(o, where=f"{path}[{i}]") for i, o in enumerate(data)]


def save_pgt_boxes(path: str | Path, boxes: Iterable[PgtBox]) -> None:
    dump_json(path, [pgt_box_to_obj(b) for b in boxes])


# ---------------------------------------------------------------------------
# loss records: [{cls_loss, reg_loss?, box_loss?, iou_loss?,
#                 is_positive?/is_foreground?, error?, pgt?}]


def load_roi_records(path: str | Path) -> list[RoiLossRecord]:
    data = load_json(path)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of RoI loss records")
    out = []
    for i, obj in enumerate(data):
        where = f"{path}[{i}]"
        out.append(
            RoiLossRecord(
                cls_loss=float(_require(obj, "cls_loss", where)),
                reg_loss=float(obj.get("reg_loss", 0.0)),
                is_positive=bool(obj.get("is_positive", False)),
            )
        )
    return out


def load_query_records(path: str | Path) -> list[QueryLossRecord]:
    data = load_json(path)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of query loss records")
    out = []
    for i, obj in enumerate(data):
        where = f"{path}[{i}]"
        out.append(
            QueryLossRecord(
                cls_loss=float(_require(obj, "cls_loss", where)),
                box_loss=float(obj.get("box_loss", 0.0)),
                iou_loss=float(obj.get("iou_loss", 0.0)),
                is_foreground=bool(obj.get("is_foreground", False)),
            )
        )
    return out


def load_raw_records(path: str | Path) -> list[dict]:
    """Raw record dicts, for stages that need extra fields (error, pgt)."""
    data = load_json(path)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of records")
    return data


# ---------------------------------------------------------------------------
# by-image collections: {"image_id": [ ...boxes... ]}


def by_image_boxes(data: Any, loader, where: str) -> dict[str, list]:
    """Normalize a by-image mapping (or a bare single-image array)."""
    if isinstance(data, list):
        return {"_": [loader(o, f"{where}[_][{i}]") for i, o in enumerate(data)]}
    if isinstance(data, dict):
        out = {}
        for image_id, items in data.items():
            if not isinstance(items, list):
                raise ValueError(f"{where}[{image_id}]: expected a JSON array")
            out[image_id] = [
                loader(o, f"{where}[{image_id}][{i}]") for i, o in enumerate(items)
            ]
        return out
    raise ValueError(f"{where}: expected a JSON object keyed by image id, or an array")
