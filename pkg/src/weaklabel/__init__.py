"""weaklabel: prompt extraction, adaptive pseudo ground truth, drop-mask
regularization helpers, and box-level evaluation metrics for weakly-supervised
detection pipelines. All neural model outputs enter as files."""

from .activation import (
    ActivationStack,
    load_tensor,
    normalize_map,
    normalize_stack,
    reshape_to_maps,
    resize_to_image,
)
from .config import RunConfig, validate_config
from .dropreg import (
    DropParams,
    LossBin,
    QueryLossRecord,
    RoiLossRecord,
    batch_normalize_query_losses,
    hungarian_masked_loss,
    loss_interval_stats,
    query_drop_mask,
    roi_drop_mask,
    roi_masked_loss,
)
from .evaluation import (
    GtBox,
    RecallReport,
    corloc,
    feature_cosine_similarity,
    pgt_error_rate,
    recall_at_iou,
)
from .geometry import Box, ScoredBox, area, intersection_area, iou, overlap_over_self
from .peaks import PeakParams, PeakPoint, extract_peaks, peaks_to_prompts, pool_candidates
from .pgt import PgtBox, PgtParams, adaptive_pgt, normalize_scores, top1_pgt
from .prompts import (
    GridParams,
    PromptPoint,
    assemble_prompts,
    cluster_instance_prompts,
    dense_grid,
    map_peak_to_image,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationStack",
    "Box",
    "DropParams",
    "GridParams",
    "GtBox",
    "LossBin",
    "PeakParams",
    "PeakPoint",
    "PgtBox",
    "PgtParams",
    "PromptPoint",
    "QueryLossRecord",
    "RecallReport",
    "RoiLossRecord",
    "RunConfig",
    "ScoredBox",
    "adaptive_pgt",
    "area",
    "assemble_prompts",
    "batch_normalize_query_losses",
    "cluster_instance_prompts",
    "corloc",
    "dense_grid",
    "extract_peaks",
    "feature_cosine_similarity",
    "hungarian_masked_loss",
    "intersection_area",
    "iou",
    "load_tensor",
    "loss_interval_stats",
    "map_peak_to_image",
    "normalize_map",
    "normalize_scores",
    "normalize_stack",
    "overlap_over_self",
    "peaks_to_prompts",
    "pgt_error_rate",
    "pool_candidates",
    "query_drop_mask",
    "recall_at_iou",
    "reshape_to_maps",
    "resize_to_image",
    "roi_drop_mask",
    "roi_masked_loss",
    "top1_pgt",
    "validate_config",
]
