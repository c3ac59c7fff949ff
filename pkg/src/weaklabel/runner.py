"""Manifest-driven stage execution and end-to-end pipeline chaining.

Every stage processes manifest entries independently (bounded thread pool,
failures isolated per image) and writes, under <out_dir>/<stage>/, one
directory per image plus a summary.json assembled in manifest order. The
pipeline subcommand chains peaks -> prompts -> proposals (mock segmenter) ->
pgt -> eval against the same output tree.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable

from . import activation, dropreg, evaluation, formats, mocksam, pgt, prompts
from .config import RunConfig
from .manifest import Manifest, ManifestEntry
from .peaks import PeakParams, extract_peaks, peaks_to_prompts

log = logging.getLogger("weaklabel")

# tensor source kind -> prompt kind produced from its peaks
PROMPT_KIND_BY_SOURCE = {
    "cross_attention": "instance",
    "coarse_cam": "semantic",
    "fine_cam": "semantic",
}

STAGES = (
    "peaks",
    "prompts",
    "proposals",
    "pgt",
    "dropmask-roi",
    "dropmask-query",
    "loss-stats",
    "eval-recall",
    "eval-corloc",
    "eval-pgt",
    "sim",
)


class StageInputError(ValueError):
    pass


def _entry_dir(out_dir: Path, stage: str, image_id: str) -> Path:
    d = out_dir / stage / image_id
    d.mkdir(parents=True, exist_ok=True)
    return d


def _rel(out_dir: Path, path: Path) -> str:
    return path.relative_to(out_dir).as_posix()


def _need(path: Path | None, field: str, image_id: str) -> Path:
    if path is None:
        raise StageInputError(f"{image_id}: missing manifest field '{field}'")
    if not path.exists():
        raise StageInputError(f"{image_id}: {field} file not found: {path}")
    return path


def _load_gt(entry: ManifestEntry):
    path = _need(entry.gt_path, "gt_path", entry.image_id)
    return formats.load_gt_boxes(path, image_id=entry.image_id)


def _boxes_for(entry: ManifestEntry, role: str, out_dir: Path, fallback_stage: str,
               fallback_name: str) -> Path:
    if role in entry.box_paths:
        return _need(entry.box_paths[role], f"box_paths[{role}]", entry.image_id)
    candidate = out_dir / fallback_stage / entry.image_id / fallback_name
    if candidate.exists():
        return candidate
    raise StageInputError(
        f"{entry.image_id}: no box_paths[{role}] in manifest and no "
        f"{fallback_stage} stage output at {candidate}"
    )


# ---------------------------------------------------------------------------
# per-entry stage handlers: return (output relpaths, payload for aggregation)


def _stage_peaks(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    if not entry.tensor_paths:
        raise StageInputError(f"{entry.image_id}: no tensor_paths in manifest")
    dest = _entry_dir(out_dir, "peaks", entry.image_id)
    params = PeakParams(kernel_size=cfg.kernel, activation_threshold=cfg.tau)
    outputs = []
    counts = {}
    for kind in sorted(entry.tensor_paths):
        path = _need(entry.tensor_paths[kind], f"tensor_paths[{kind}]", entry.image_id)
        stack = activation.load_tensor(path, origin=kind)
        if cfg.grid_n is not None:
            stack = activation.reshape_to_maps(stack, cfg.grid_n)
        stack = activation.resize_to_image(stack, entry.image_width, entry.image_height)
        stack = activation.normalize_stack(stack)
        found = extract_peaks(stack, params)
        out_path = dest / f"peaks_{kind}.json"
        formats.save_peaks(out_path, found)
        outputs.append(_rel(out_dir, out_path))
        counts[kind] = len(found)
    return outputs, {"peaks_per_kind": counts}


def _stage_prompts(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    peaks_dir = out_dir / "peaks" / entry.image_id
    if entry.tensor_paths and not peaks_dir.exists():
        raise StageInputError(
            f"{entry.image_id}: no peaks stage output at {peaks_dir}; run 'peaks' first"
        )
    instance = []
    semantic = []
    for kind in sorted(PROMPT_KIND_BY_SOURCE):
        path = peaks_dir / f"peaks_{kind}.json"
        if not path.exists():
            continue
        found = formats.load_peaks(path)
        tagged = peaks_to_prompts(found, PROMPT_KIND_BY_SOURCE[kind])
        if PROMPT_KIND_BY_SOURCE[kind] == "instance":
            instance.extend(tagged)
        else:
            semantic.extend(tagged)
    spatial = prompts.dense_grid(entry.image_width, entry.image_height, cfg.grid_s)
    clustered = prompts.cluster_instance_prompts(instance, cfg.effective_cluster_radius)
    assembled = prompts.assemble_prompts(spatial, clustered, semantic)
    dest = _entry_dir(out_dir, "prompts", entry.image_id)
    out_path = dest / "prompts.json"
    formats.save_prompts(out_path, assembled)
    counts = {k: sum(1 for p in assembled if p.kind == k) for k in prompts.PROMPT_KINDS}
    return [_rel(out_dir, out_path)], {"prompts_per_kind": counts}


def _stage_proposals(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    prompts_path = out_dir / "prompts" / entry.image_id / "prompts.json"
    if not prompts_path.exists():
        raise StageInputError(
            f"{entry.image_id}: no prompts stage output at {prompts_path}; run 'prompts' first"
        )
    prompt_list = formats.load_prompts(prompts_path)
    labels = entry.labels if entry.labels else (0,)
    boxes = mocksam.prompts_to_boxes(
        prompt_list,
        image_width=entry.image_width,
        image_height=entry.image_height,
        box_size=cfg.mock_box_size,
        labels=labels,
    )
    dest = _entry_dir(out_dir, "proposals", entry.image_id)
    out_path = dest / "boxes.json"
    formats.save_scored_boxes(out_path, boxes)
    return [_rel(out_dir, out_path)], {"boxes": len(boxes)}


def _stage_pgt(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    boxes_path = _boxes_for(entry, "detections", out_dir, "proposals", "boxes.json")
    boxes = formats.load_scored_boxes(boxes_path)
    labels = entry.labels if entry.labels is not None else sorted({b.label for b in boxes})
    params = pgt.PgtParams(score_threshold=cfg.tau_s, overlap_threshold=cfg.tau_o)
    if cfg.top1:
        result = pgt.top1_pgt(boxes, labels)
    else:
        result = pgt.adaptive_pgt(boxes, labels, params, fallback=not cfg.no_fallback)
    dest = _entry_dir(out_dir, "pgt", entry.image_id)
    out_path = dest / "pgt.json"
    formats.save_pgt_boxes(out_path, result)
    n_fallback = sum(1 for p in result if p.fallback)
    return [_rel(out_dir, out_path)], {"boxes": len(result), "fallback": n_fallback}


def _stage_dropmask_roi(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    path = _need(entry.records_path, "records_path", entry.image_id)
    records = formats.load_roi_records(path)
    params = dropreg.DropParams(
        tau_cls=cfg.tau_cls, tau_reg=cfg.tau_reg, percentile=cfg.percentile, lam=cfg.lam
    )
    mask = dropreg.roi_drop_mask(records, params)
    loss = dropreg.roi_masked_loss(records, mask, lam=cfg.lam)
    dest = _entry_dir(out_dir, "dropmask-roi", entry.image_id)
    out_path = dest / "mask.json"
    formats.dump_json(
        out_path,
        {"mask": mask, "kept": int(sum(mask)), "masked_loss": float(loss)},
    )
    return [_rel(out_dir, out_path)], {"total": len(mask), "kept": int(sum(mask))}


def _stage_dropmask_query(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    path = _need(entry.records_path, "records_path", entry.image_id)
    records = formats.load_query_records(path)
    normalized = dropreg.batch_normalize_query_losses(records)
    flags = [r.is_foreground for r in records]
    mask = dropreg.query_drop_mask(normalized, flags, cfg.percentile, cfg.scope)
    loss = dropreg.hungarian_masked_loss(records, mask)
    dest = _entry_dir(out_dir, "dropmask-query", entry.image_id)
    out_path = dest / "mask.json"
    formats.dump_json(
        out_path,
        {
            "mask": mask,
            "normalized_cls": [float(v) for v in normalized],
            "kept": int(sum(mask)),
            "masked_loss": float(loss),
        },
    )
    return [_rel(out_dir, out_path)], {"total": len(mask), "kept": int(sum(mask))}


def error_flags_for_records(
    raw_records: list[dict],
    gt_boxes,
    iou_threshold: float,
    where: str = "records",
) -> list[bool]:
    """Per-record error flags: explicit 'error' field, or the record's 'pgt'
    box checked for a same-class GT match at the IoU threshold."""
    from .geometry import iou as box_iou

    flags = []
    for i, rec in enumerate(raw_records):
        if "error" in rec:
            flags.append(bool(rec["error"]))
            continue
        if "pgt" not in rec:
            raise StageInputError(
                f"{where}: record {i} has neither 'error' nor 'pgt' field"
            )
        if gt_boxes is None:
            raise StageInputError(
                f"{where}: record {i} carries a 'pgt' box but no ground truth is given"
            )
        target = formats.gt_box_from_obj(rec["pgt"], where=f"{where}[{i}].pgt")
        matched = any(
            g.label == target.label and box_iou(target.box, g.box) >= iou_threshold
            for g in gt_boxes
        )
        flags.append(not matched)
    return flags


def _stage_loss_stats(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    path = _need(entry.records_path, "records_path", entry.image_id)
    raw = formats.load_raw_records(path)
    key = f"{cfg.loss_field}_loss"
    losses = []
    for i, rec in enumerate(raw):
        if key not in rec:
            raise StageInputError(f"{entry.image_id}: record {i} has no field '{key}'")
        losses.append(float(rec[key]))
    gt_boxes = _load_gt(entry) if entry.gt_path is not None else None
    flags = error_flags_for_records(raw, gt_boxes, cfg.pgt_iou, where=entry.image_id)
    bins = dropreg.loss_interval_stats(losses, flags, cfg.bins)
    dest = _entry_dir(out_dir, "loss-stats", entry.image_id)
    out_path = dest / "stats.json"
    formats.dump_json(out_path, _bins_to_obj(bins, cfg.loss_field))
    return [_rel(out_dir, out_path)], {"losses": losses, "flags": flags}


def _bins_to_obj(bins: list[dropreg.LossBin], field: str) -> dict:
    return {
        "field": field,
        "bins": [
            {
                "lower": b.lower,
                "upper": b.upper,
                "count": b.count,
                "error_rate": b.error_rate,
            }
            for b in bins
        ],
    }


def _stage_eval_recall(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    boxes_path = _boxes_for(entry, "proposals", out_dir, "proposals", "boxes.json")
    proposals = [b.box for b in formats.load_scored_boxes(boxes_path)]
    gt_boxes = _load_gt(entry)
    reports = [
        evaluation.recall_at_iou(
            {entry.image_id: proposals}, {entry.image_id: gt_boxes}, t
        )
        for t in cfg.iou_thresholds
    ]
    dest = _entry_dir(out_dir, "eval-recall", entry.image_id)
    out_path = dest / "recall.json"
    formats.dump_json(
        out_path,
        [
            {
                "iou_threshold": r.iou_threshold,
                "recall": r.recall,
                "avg_proposals_per_image": r.avg_proposals_per_image,
            }
            for r in reports
        ],
    )
    return [_rel(out_dir, out_path)], {"proposals": proposals, "gt": gt_boxes}


def _stage_eval_corloc(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    boxes_path = _boxes_for(entry, "detections", out_dir, "proposals", "boxes.json")
    dets = formats.load_scored_boxes(boxes_path)
    gt_boxes = _load_gt(entry)
    value = None
    if gt_boxes:
        value = evaluation.corloc(
            {entry.image_id: dets}, {entry.image_id: gt_boxes}, cfg.corloc_iou
        )
    dest = _entry_dir(out_dir, "eval-corloc", entry.image_id)
    out_path = dest / "corloc.json"
    formats.dump_json(out_path, {"corloc": value})
    return [_rel(out_dir, out_path)], {"detections": dets, "gt": gt_boxes}


def _stage_eval_pgt(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    pgt_path = _boxes_for(entry, "pgt", out_dir, "pgt", "pgt.json")
    pgt_boxes = formats.load_pgt_boxes(pgt_path)
    gt_boxes = _load_gt(entry)
    rate = evaluation.pgt_error_rate(
        {entry.image_id: pgt_boxes}, {entry.image_id: gt_boxes}, cfg.pgt_iou
    )
    dest = _entry_dir(out_dir, "eval-pgt", entry.image_id)
    out_path = dest / "pgt_error.json"
    formats.dump_json(out_path, {"error_rate": rate, "total": len(pgt_boxes)})
    return [_rel(out_dir, out_path)], {"pgt": pgt_boxes, "gt": gt_boxes}


def _stage_sim(entry: ManifestEntry, cfg: RunConfig, out_dir: Path):
    path = _need(entry.features_path, "features_path", entry.image_id)
    feats = formats.read_wlt1(path)
    if feats.ndim != 2:
        raise StageInputError(
            f"{entry.image_id}: features tensor must be rank 2, got rank {feats.ndim}"
        )
    sample = min(cfg.sample, feats.shape[0])
    _, summary = evaluation.feature_cosine_similarity(feats, sample, cfg.seed)
    dest = _entry_dir(out_dir, "sim", entry.image_id)
    out_path = dest / "sim.json"
    formats.dump_json(out_path, summary)
    return [_rel(out_dir, out_path)], {"mean_offdiag": summary["mean_offdiag"]}


_HANDLERS: dict[str, Callable] = {
    "peaks": _stage_peaks,
    "prompts": _stage_prompts,
    "proposals": _stage_proposals,
    "pgt": _stage_pgt,
    "dropmask-roi": _stage_dropmask_roi,
    "dropmask-query": _stage_dropmask_query,
    "loss-stats": _stage_loss_stats,
    "eval-recall": _stage_eval_recall,
    "eval-corloc": _stage_eval_corloc,
    "eval-pgt": _stage_eval_pgt,
    "sim": _stage_sim,
}


# ---------------------------------------------------------------------------
# aggregation over successful entries


def _aggregate(stage: str, cfg: RunConfig, payloads: dict[str, dict]) -> dict:
    if stage == "eval-recall":
        proposals = {i: p["proposals"] for i, p in payloads.items()}
        gt = {i: p["gt"] for i, p in payloads.items()}
        if not gt:
            return {"reports": []}
        return {
            "reports": [
                {
                    "iou_threshold": r.iou_threshold,
                    "recall": r.recall,
                    "avg_proposals_per_image": r.avg_proposals_per_image,
                }
                for r in (
                    evaluation.recall_at_iou(proposals, gt, t)
                    for t in cfg.iou_thresholds
                )
            ]
        }
    if stage == "eval-corloc":
        dets = {i: p["detections"] for i, p in payloads.items()}
        gt = {i: p["gt"] for i, p in payloads.items()}
        if not any(gt.values()):
            return {"corloc": None}
        return {"corloc": evaluation.corloc(dets, gt, cfg.corloc_iou)}
    if stage == "eval-pgt":
        pgt_all = {i: p["pgt"] for i, p in payloads.items()}
        gt = {i: p["gt"] for i, p in payloads.items()}
        if not pgt_all:
            return {"error_rate": None, "total": 0}
        rate = evaluation.pgt_error_rate(pgt_all, gt, cfg.pgt_iou)
        return {"error_rate": rate, "total": sum(len(v) for v in pgt_all.values())}
    if stage == "loss-stats":
        losses = [v for p in payloads.values() for v in p["losses"]]
        flags = [v for p in payloads.values() for v in p["flags"]]
        if not losses:
            return {"pooled": None}
        bins = dropreg.loss_interval_stats(losses, flags, cfg.bins)
        return {"pooled": _bins_to_obj(bins, cfg.loss_field)}
    if stage == "peaks":
        totals: dict[str, int] = {}
        for p in payloads.values():
            for kind, n in p["peaks_per_kind"].items():
                totals[kind] = totals.get(kind, 0) + n
        return {"total_peaks_per_kind": totals}
    if stage == "prompts":
        totals = {}
        for p in payloads.values():
            for kind, n in p["prompts_per_kind"].items():
                totals[kind] = totals.get(kind, 0) + n
        return {"total_prompts_per_kind": totals}
    if stage in ("proposals", "pgt"):
        return {"total_boxes": sum(p["boxes"] for p in payloads.values())}
    if stage in ("dropmask-roi", "dropmask-query"):
        return {
            "total": sum(p["total"] for p in payloads.values()),
            "kept": sum(p["kept"] for p in payloads.values()),
        }
    if stage == "sim":
        means = [p["mean_offdiag"] for p in payloads.values() if p["mean_offdiag"] is not None]
        return {"mean_offdiag": (sum(means) / len(means)) if means else None}
    return {}


def run_stage(
    stage: str,
    manifest: Manifest,
    cfg: RunConfig,
    out_dir: str | Path,
    workers: int | None = None,
) -> dict:
    """Run one stage over a manifest; returns (and writes) the stage summary."""
    if stage not in _HANDLERS:
        raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")
    out_dir = Path(out_dir)
    (out_dir / stage).mkdir(parents=True, exist_ok=True)
    handler = _HANDLERS[stage]
    n_workers = workers if workers is not None else cfg.workers

    def process(entry: ManifestEntry):
        try:
            outputs, payload = handler(entry, cfg, out_dir)
            return {"image_id": entry.image_id, "status": "ok", "outputs": outputs}, payload
        except Exception as exc:  # per-image isolation: one bad image never aborts the batch
            log.warning("stage %s failed for %s: %s", stage, entry.image_id, exc)
            return {"image_id": entry.image_id, "status": "failed", "error": str(exc)}, None

    if n_workers > 1 and len(manifest.entries) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(process, manifest.entries))
    else:
        results = [process(e) for e in manifest.entries]

    payloads = {
        r["image_id"]: payload for r, payload in results if r["status"] == "ok"
    }
    entries = [r for r, _ in results]
    failed = sum(1 for r in entries if r["status"] == "failed")
    summary = {
        "stage": stage,
        "config": cfg.to_dict(),
        "entries": entries,
        "aggregate": _aggregate(stage, cfg, payloads),
        "failed": failed,
    }
    formats.dump_json(out_dir / stage / "summary.json", summary)
    return summary


PIPELINE_STAGES = ("peaks", "prompts", "proposals", "pgt", "eval-recall", "eval-pgt")


def run_pipeline(
    manifest: Manifest,
    cfg: RunConfig,
    out_dir: str | Path,
    workers: int | None = None,
    mock_sam: bool = False,
) -> dict:
    """Chain the full stage sequence over one manifest.

    Without the mock segmenter the chain stops after prompts unless the
    manifest supplies detection boxes; eval stages run only when ground truth
    paths are present.
    """
    out_dir = Path(out_dir)
    stage_summaries = []
    have_boxes = mock_sam or all(
        "detections" in e.box_paths for e in manifest.entries
    )
    have_gt = bool(manifest.entries) and all(
        e.gt_path is not None for e in manifest.entries
    )
    for stage in PIPELINE_STAGES:
        if stage == "proposals" and not mock_sam:
            continue
        if stage == "pgt" and not have_boxes:
            log.info("pipeline stops after prompts: no detection boxes and no --mock-sam")
            break
        if stage in ("eval-recall", "eval-pgt") and not have_gt:
            continue
        summary = run_stage(stage, manifest, cfg, out_dir, workers)
        stage_summaries.append({"stage": stage, "failed": summary["failed"]})
    total_failed = sum(s["failed"] for s in stage_summaries)
    pipeline_summary = {
        "stages": stage_summaries,
        "failed": total_failed,
        "status": "ok" if total_failed == 0 else "failed",
    }
    formats.dump_json(out_dir / "pipeline_summary.json", pipeline_summary)
    return pipeline_summary
