"""Command-line front end.

Every stage subcommand runs in one of two modes: single-file (the stage's own
flags) or batch (--manifest plus --out-dir, entries processed independently).
`weaklabel pipeline` chains peaks -> prompts -> [proposals] -> pgt -> eval
over a manifest. Log level comes from the WEAKLABEL_LOG environment variable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import activation, dropreg, evaluation, formats, pgt, prompts, runner
from .config import RunConfig, validate_config
from .manifest import load_manifest
from .peaks import PeakParams, extract_peaks, peaks_to_prompts

log = logging.getLogger("weaklabel")

_CONFIG_FLAGS = (
    "kernel", "tau", "grid_s", "grid_n", "cluster_radius", "tau_s", "tau_o",
    "no_fallback", "top1", "tau_cls", "tau_reg", "percentile", "lam", "scope",
    "bins", "loss_field", "iou_thresholds", "corloc_iou", "pgt_iou", "sample",
    "seed", "mock_box_size", "workers",
)


def _setup_logging() -> None:
    level = os.environ.get("WEAKLABEL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _emit(obj, out: str | None) -> None:
    if out:
        formats.dump_json(out, obj)
    else:
        sys.stdout.write(formats.dumps_canonical(obj))


def _parse_iou_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _parse_labels(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _build_config(args: argparse.Namespace) -> tuple[RunConfig, list[str]]:
    file_values = {}
    if getattr(args, "config", None):
        raw = formats.load_json(args.config)
        if not isinstance(raw, dict):
            return RunConfig(), [f"{args.config}: config must be a flat JSON object"]
        file_values = raw
    flag_values = {}
    for name in _CONFIG_FLAGS:
        if not hasattr(args, name):
            continue
        value = getattr(args, name)
        if value is None:
            continue
        if name in ("no_fallback", "top1") and value is False:
            continue  # store_true flags only override when set
        flag_values[name] = value
    return validate_config(file_values, flag_values)


# ---------------------------------------------------------------------------
# single-file handlers


def _single_peaks(args, cfg: RunConfig) -> int:
    stack = activation.load_tensor(args.tensor)
    if cfg.grid_n is not None:
        stack = activation.reshape_to_maps(stack, cfg.grid_n)
    stack = activation.resize_to_image(stack, args.image_w, args.image_h)
    stack = activation.normalize_stack(stack)
    found = extract_peaks(stack, PeakParams(cfg.kernel, cfg.tau))
    _emit([formats.peak_to_obj(p) for p in found], args.out)
    return 0


def _single_prompts(args, cfg: RunConfig) -> int:
    instance = []
    for path in args.peaks_instance or []:
        instance.extend(peaks_to_prompts(formats.load_peaks(path), "instance"))
    semantic = []
    for path in args.peaks_semantic or []:
        semantic.extend(peaks_to_prompts(formats.load_peaks(path), "semantic"))
    spatial = prompts.dense_grid(args.image_w, args.image_h, cfg.grid_s)
    clustered = prompts.cluster_instance_prompts(instance, cfg.effective_cluster_radius)
    assembled = prompts.assemble_prompts(spatial, clustered, semantic)
    _emit([formats.prompt_to_obj(p) for p in assembled], args.out)
    return 0


def _single_pgt(args, cfg: RunConfig) -> int:
    boxes = formats.load_scored_boxes(args.boxes)
    labels = _parse_labels(args.labels) if args.labels else sorted({b.label for b in boxes})
    params = pgt.PgtParams(score_threshold=cfg.tau_s, overlap_threshold=cfg.tau_o)
    if cfg.top1:
        result = pgt.top1_pgt(boxes, labels)
    else:
        result = pgt.adaptive_pgt(boxes, labels, params, fallback=not cfg.no_fallback)
    _emit([formats.pgt_box_to_obj(b) for b in result], args.out)
    return 0


def _single_dropmask_roi(args, cfg: RunConfig) -> int:
    records = formats.load_roi_records(args.records)
    params = dropreg.DropParams(
        tau_cls=cfg.tau_cls, tau_reg=cfg.tau_reg, percentile=cfg.percentile, lam=cfg.lam
    )
    mask = dropreg.roi_drop_mask(records, params)
    loss = dropreg.roi_masked_loss(records, mask, lam=cfg.lam)
    _emit({"mask": mask, "kept": int(sum(mask)), "masked_loss": float(loss)}, args.out)
    return 0


def _single_dropmask_query(args, cfg: RunConfig) -> int:
    records = formats.load_query_records(args.records)
    normalized = dropreg.batch_normalize_query_losses(records)
    flags = [r.is_foreground for r in records]
    mask = dropreg.query_drop_mask(normalized, flags, cfg.percentile, cfg.scope)
    loss = dropreg.hungarian_masked_loss(records, mask)
    _emit(
        {
            "mask": mask,
            "normalized_cls": [float(v) for v in normalized],
            "kept": int(sum(mask)),
            "masked_loss": float(loss),
        },
        args.out,
    )
    return 0


def _single_loss_stats(args, cfg: RunConfig) -> int:
    raw = formats.load_raw_records(args.records)
    key = f"{cfg.loss_field}_loss"
    losses = []
    for i, rec in enumerate(raw):
        if key not in rec:
            raise ValueError(f"{args.records}[{i}]: no field '{key}'")
        losses.append(float(rec[key]))
    gt_boxes = formats.load_gt_boxes(args.gt) if args.gt else None
    flags = runner.error_flags_for_records(raw, gt_boxes, cfg.pgt_iou, where=str(args.records))
    bins = dropreg.loss_interval_stats(losses, flags, cfg.bins)
    _emit(runner._bins_to_obj(bins, cfg.loss_field), args.out)
    return 0


def _load_by_image(path, loader):
    data = formats.load_json(path)
    return formats.by_image_boxes(data, loader, where=str(path))


def _single_eval_recall(args, cfg: RunConfig) -> int:
    props = _load_by_image(args.proposals, lambda o, w: formats.box_from_obj(o, w))
    gt = _load_by_image(args.gt, lambda o, w: formats.gt_box_from_obj(o, where=w))
    gt = {i: [evaluation.GtBox(g.label, g.box, i) for g in v] for i, v in gt.items()}
    reports = [
        evaluation.recall_at_iou(props, gt, t) for t in cfg.iou_thresholds
    ]
    _emit(
        [
            {
                "iou_threshold": r.iou_threshold,
                "recall": r.recall,
                "avg_proposals_per_image": r.avg_proposals_per_image,
            }
            for r in reports
        ],
        args.out,
    )
    return 0


def _single_eval_corloc(args, cfg: RunConfig) -> int:
    dets = _load_by_image(args.dets, lambda o, w: formats.scored_box_from_obj(o, w))
    gt = _load_by_image(args.gt, lambda o, w: formats.gt_box_from_obj(o, where=w))
    value = evaluation.corloc(dets, gt, cfg.corloc_iou)
    _emit({"corloc": value}, args.out)
    return 0


def _single_eval_pgt(args, cfg: RunConfig) -> int:
    pgt_boxes = _load_by_image(args.pgt, lambda o, w: formats.gt_box_from_obj(o, where=w))
    gt = _load_by_image(args.gt, lambda o, w: formats.gt_box_from_obj(o, where=w))
    rate = evaluation.pgt_error_rate(pgt_boxes, gt, cfg.pgt_iou)
    total = sum(len(v) for v in pgt_boxes.values())
    _emit({"error_rate": rate, "total": total}, args.out)
    return 0


def _single_sim(args, cfg: RunConfig) -> int:
    feats = formats.read_wlt1(args.features)
    if feats.ndim != 2:
        raise ValueError(f"{args.features}: features tensor must be rank 2")
    matrix, summary = evaluation.feature_cosine_similarity(feats, cfg.sample, cfg.seed)
    if args.include_matrix:
        summary = {**summary, "matrix": [[float(v) for v in row] for row in matrix]}
    _emit(summary, args.out)
    return 0


_SINGLE_HANDLERS = {
    "peaks": (_single_peaks, ("tensor",)),
    "prompts": (_single_prompts, ()),
    "pgt": (_single_pgt, ("boxes",)),
    "dropmask-roi": (_single_dropmask_roi, ("records",)),
    "dropmask-query": (_single_dropmask_query, ("records",)),
    "loss-stats": (_single_loss_stats, ("records",)),
    "eval-recall": (_single_eval_recall, ("proposals", "gt")),
    "eval-corloc": (_single_eval_corloc, ("dets", "gt")),
    "eval-pgt": (_single_eval_pgt, ("pgt", "gt")),
    "sim": (_single_sim, ("features",)),
}


# ---------------------------------------------------------------------------
# parser


def _add_batch_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", help="batch manifest JSON; enables batch mode")
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--out-dir", default="out", help="batch output directory")
    p.add_argument("--workers", type=int, default=None, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weaklabel",
        description="Prompt extraction, pseudo-GT generation, drop masks, and "
        "box metrics over serialized activation maps and box lists.",
    )
    sub = parser.add_subparsers(dest="stage", required=True)

    p = sub.add_parser("peaks", help="extract peak points from an activation tensor")
    _add_batch_flags(p)
    p.add_argument("--tensor", help="WLT1 tensor file")
    p.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    p.add_argument("--image-w", dest="image_w", type=int)
    p.add_argument("--image-h", dest="image_h", type=int)
    p.add_argument("--kernel", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--out")

    p = sub.add_parser("prompts", help="assemble the prompt list")
    _add_batch_flags(p)
    p.add_argument("--peaks-semantic", dest="peaks_semantic", action="append")
    p.add_argument("--peaks-instance", dest="peaks_instance", action="append")
    p.add_argument("--grid-s", dest="grid_s", type=int, default=None)
    p.add_argument("--image-w", dest="image_w", type=int)
    p.add_argument("--image-h", dest="image_h", type=int)
    p.add_argument("--cluster-radius", dest="cluster_radius", type=float, default=None)
    p.add_argument("--out")

    p = sub.add_parser("pgt", help="adaptive pseudo ground truth from scored boxes")
    _add_batch_flags(p)
    p.add_argument("--boxes", help="scored boxes JSON")
    p.add_argument("--labels", help="comma-separated image label ids")
    p.add_argument("--tau-s", dest="tau_s", type=float, default=None)
    p.add_argument("--tau-o", dest="tau_o", type=float, default=None)
    p.add_argument("--no-fallback", dest="no_fallback", action="store_true", default=False)
    p.add_argument("--top1", action="store_true", default=False)
    p.add_argument("--out")

    p = sub.add_parser("dropmask-roi", help="RoI keep/drop mask from loss records")
    _add_batch_flags(p)
    p.add_argument("--records", help="RoI loss records JSON")
    p.add_argument("--tau-cls", dest="tau_cls", type=float, default=None)
    p.add_argument("--tau-reg", dest="tau_reg", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--out")

    p = sub.add_parser("dropmask-query", help="query keep/drop mask from loss records")
    _add_batch_flags(p)
    p.add_argument("--records", help="query loss records JSON")
    p.add_argument("--percentile", type=float, default=None)
    p.add_argument("--scope", choices=("things", "both"), default=None)
    p.add_argument("--out")

    p = sub.add_parser("loss-stats", help="per-loss-interval counts and error rates")
    _add_batch_flags(p)
    p.add_argument("--records", help="loss records JSON")
    p.add_argument("--field", dest="loss_field", choices=("cls", "reg", "box", "iou"), default=None)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--gt", help="ground truth boxes JSON (for records with pgt boxes)")
    p.add_argument("--iou-thresh", dest="pgt_iou", type=float, default=None)
    p.add_argument("--out")

    p = sub.add_parser("eval-recall", help="proposal recall at IoU thresholds")
    _add_batch_flags(p)
    p.add_argument("--proposals", help="by-image proposals JSON")
    p.add_argument("--gt", help="by-image ground truth JSON")
    p.add_argument("--iou", dest="iou_thresholds", type=_parse_iou_list, default=None)
    p.add_argument("--out")

    p = sub.add_parser("eval-corloc", help="correct localization rate")
    _add_batch_flags(p)
    p.add_argument("--dets", help="by-image scored detections JSON")
    p.add_argument("--gt", help="by-image ground truth JSON")
    p.add_argument("--iou", dest="corloc_iou", type=float, default=None)
    p.add_argument("--out")

    p = sub.add_parser("eval-pgt", help="pseudo-GT error rate against ground truth")
    _add_batch_flags(p)
    p.add_argument("--pgt", help="by-image PGT boxes JSON")
    p.add_argument("--gt", help="by-image ground truth JSON")
    p.add_argument("--iou", dest="pgt_iou", type=float, default=None)
    p.add_argument("--out")

    p = sub.add_parser("sim", help="proposal-feature cosine similarity summary")
    _add_batch_flags(p)
    p.add_argument("--features", help="WLT1 feature matrix (M x D)")
    p.add_argument("--sample", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--include-matrix", dest="include_matrix", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("pipeline", help="chain peaks -> prompts -> [proposals] -> pgt -> eval")
    _add_batch_flags(p)
    p.add_argument("--mock-sam", dest="mock_sam", action="store_true", default=False)
    p.add_argument("--mock-box-size", dest="mock_box_size", type=float, default=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg, errors = _build_config(args)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2

    try:
        if args.stage == "pipeline":
            if not args.manifest:
                print("pipeline requires --manifest", file=sys.stderr)
                return 2
            manifest = load_manifest(args.manifest)
            summary = runner.run_pipeline(
                manifest, cfg, Path(args.out_dir), workers=args.workers,
                mock_sam=args.mock_sam,
            )
            return 0 if summary["failed"] == 0 else 1

        if args.manifest:
            manifest = load_manifest(args.manifest)
            summary = runner.run_stage(
                args.stage, manifest, cfg, Path(args.out_dir), workers=args.workers
            )
            return 0 if summary["failed"] == 0 else 1

        handler, required = _SINGLE_HANDLERS[args.stage]
        missing = [name for name in required if not getattr(args, name, None)]
        if missing:
            flags = ", ".join(f"--{m.replace('_', '-')}" for m in missing)
            print(
                f"{args.stage}: missing {flags} (or use --manifest for batch mode)",
                file=sys.stderr,
            )
            return 2
        if args.stage in ("peaks", "prompts") and (
            args.image_w is None or args.image_h is None
        ):
            print(f"{args.stage}: --image-w and --image-h are required", file=sys.stderr)
            return 2
        return handler(args, cfg)
    except Exception as exc:
        log.debug("fatal error", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
