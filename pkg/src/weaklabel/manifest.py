"""Batch manifests: one entry per image, pointing at that image's input files.

Schema (JSON):
    {"entries": [{"image_id": str, "image_width": int, "image_height": int,
                  "tensor_paths": {kind: path, ...},      # optional
                  "box_paths": {role: path, ...},         # optional
                  "gt_path": path,                        # optional
                  "labels": [int, ...],                   # optional
                  "records_path": path,                   # optional
                  "features_path": path}, ...]}           # optional

Relative paths resolve against the manifest file's directory. tensor_paths
kinds: cross_attention | coarse_cam | fine_cam; box_paths roles: proposals |
detections | pgt.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from . import formats

TENSOR_KINDS = ("cross_attention", "coarse_cam", "fine_cam")
BOX_ROLES = ("proposals", "detections", "pgt")


class ManifestError(ValueError):
    """Raised with every validation problem joined into one message."""


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    image_width: int
    image_height: int
    tensor_paths: dict[str, Path] = field(default_factory=dict)
    box_paths: dict[str, Path] = field(default_factory=dict)
    gt_path: Path | None = None
    labels: tuple[int, ...] | None = None
    records_path: Path | None = None
    features_path: Path | None = None


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    path: Path | None = None


def _entry_from_obj(obj: Mapping[str, Any], base: Path, where: str, errors: list[str]):
    def fail(msg: str) -> None:
        errors.append(f"{where}: {msg}")

    image_id = obj.get("image_id")
    if not isinstance(image_id, str) or not image_id:
        fail("image_id must be a nonempty string")
        return None
    where = f"{where} ({image_id})"
    width = obj.get("image_width")
    height = obj.get("image_height")
    for name, v in (("image_width", width), ("image_height", height)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            fail(f"{name} must be a positive integer, got {v!r}")
            return None

    def resolve(p: Any, field_name: str) -> Path | None:
        if not isinstance(p, str) or not p:
            fail(f"{field_name} must be a nonempty path string, got {p!r}")
            return None
        return (base / p).resolve() if not Path(p).is_absolute() else Path(p)

    tensor_paths: dict[str, Path] = {}
    for kind, p in (obj.get("tensor_paths") or {}).items():
        if kind not in TENSOR_KINDS:
            fail(f"tensor_paths kind {kind!r} not one of {TENSOR_KINDS}")
            continue
        rp = resolve(p, f"tensor_paths[{kind}]")
        if rp is not None:
            tensor_paths[kind] = rp
    box_paths: dict[str, Path] = {}
    for role, p in (obj.get("box_paths") or {}).items():
        if role not in BOX_ROLES:
            fail(f"box_paths role {role!r} not one of {BOX_ROLES}")
            continue
        rp = resolve(p, f"box_paths[{role}]")
        if rp is not None:
            box_paths[role] = rp
    gt_path = resolve(obj["gt_path"], "gt_path") if obj.get("gt_path") else None
    records_path = (
        resolve(obj["records_path"], "records_path") if obj.get("records_path") else None
    )
    features_path = (
        resolve(obj["features_path"], "features_path") if obj.get("features_path") else None
    )
    labels = None
    if obj.get("labels") is not None:
        raw = obj["labels"]
        if not isinstance(raw, list) or any(
            not isinstance(v, int) or isinstance(v, bool) or v < 0 for v in raw
        ):
            fail(f"labels must be a list of integers >= 0, got {raw!r}")
        else:
            labels = tuple(raw)
    return ManifestEntry(
        image_id=image_id,
        image_width=width,
        image_height=height,
        tensor_paths=tensor_paths,
        box_paths=box_paths,
        gt_path=gt_path,
        labels=labels,
        records_path=records_path,
        features_path=features_path,
    )


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    data = formats.load_json(path)
    if not isinstance(data, dict) or not isinstance(data.get("entries"), list):
        raise ManifestError(f"{path}: manifest must be an object with an 'entries' list")
    errors: list[str] = []
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for i, obj in enumerate(data["entries"]):
        if not isinstance(obj, dict):
            errors.append(f"entries[{i}]: must be an object")
            continue
        entry = _entry_from_obj(obj, path.parent, f"entries[{i}]", errors)
        if entry is None:
            continue
        if entry.image_id in seen:
            errors.append(f"entries[{i}]: duplicate image_id {entry.image_id!r}")
            continue
        seen.add(entry.image_id)
        entries.append(entry)
    if errors:
        raise ManifestError(f"{path}: " + "; ".join(errors))
    return Manifest(entries=tuple(entries), path=path)
