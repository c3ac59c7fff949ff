"""Run configuration: hyperparameter defaults, range validation, provenance.

Values merge as defaults < config file < command-line flags; every field
remembers where its value came from. Validation collects all range errors
instead of failing on the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any, Mapping

# (default, validator, description); validators return an error string or None
_RANGES: dict[str, tuple[Any, Any]] = {}


def _rule(name: str, default: Any, check) -> None:
    _RANGES[name] = (default, check)


def _positive_int(v: Any) -> str | None:
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        return f"expected integer >= 1, got {v!r}"
    return None


def _unit_interval(v: Any) -> str | None:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0.0 <= v <= 1.0:
        return f"expected value in [0, 1], got {v!r}"
    return None


def _nonnegative(v: Any) -> str | None:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or v < 0:
        return f"expected value >= 0, got {v!r}"
    return None


def _positive(v: Any) -> str | None:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
        return f"expected value > 0, got {v!r}"
    return None


def _score_threshold(v: Any) -> str | None:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0.0 <= v < 1.0:
        return f"expected value in [0, 1), got {v!r}"
    return None


def _overlap_threshold(v: Any) -> str | None:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0.0 < v <= 1.0:
        return f"expected value in (0, 1], got {v!r}"
    return None


def _percentile(v: Any) -> str | None:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0.0 < v <= 100.0:
        return f"expected value in (0, 100], got {v!r}"
    return None


def _bool(v: Any) -> str | None:
    if not isinstance(v, bool):
        return f"expected boolean, got {v!r}"
    return None


def _scope(v: Any) -> str | None:
    if v not in ("things", "both"):
        return f"expected 'things' or 'both', got {v!r}"
    return None


def _loss_field(v: Any) -> str | None:
    if v not in ("cls", "reg", "box", "iou"):
        return f"expected one of cls/reg/box/iou, got {v!r}"
    return None


def _iou_list(v: Any) -> str | None:
    if not isinstance(v, (list, tuple)) or not v:
        return f"expected a nonempty list of thresholds, got {v!r}"
    for t in v:
        if not isinstance(t, (int, float)) or isinstance(t, bool) or not 0.0 < t <= 1.0:
            return f"threshold {t!r} outside (0, 1]"
    return None


def _optional_positive_int(v: Any) -> str | None:
    if v is None:
        return None
    return _positive_int(v)


def _optional_positive(v: Any) -> str | None:
    if v is None:
        return None
    return _positive(v)


_rule("kernel", 128, _positive_int)
_rule("tau", 0.9, _unit_interval)
_rule("grid_s", 32, _positive_int)
_rule("grid_n", None, _optional_positive_int)
_rule("cluster_radius", None, _optional_positive)  # derived: kernel/2 when unset
_rule("tau_s", 0.3, _score_threshold)
_rule("tau_o", 0.85, _overlap_threshold)
_rule("no_fallback", False, _bool)
_rule("top1", False, _bool)
_rule("tau_cls", 4.0, _nonnegative)
_rule("tau_reg", 1.0, _nonnegative)
_rule("percentile", 90.0, _percentile)
_rule("lam", 1.0, _nonnegative)
_rule("scope", "things", _scope)
_rule("bins", 20, _positive_int)
_rule("loss_field", "cls", _loss_field)
_rule("iou_thresholds", (0.5, 0.75, 0.9), _iou_list)
_rule("corloc_iou", 0.5, _overlap_threshold)
_rule("pgt_iou", 0.7, _overlap_threshold)
_rule("sample", 200, _positive_int)
_rule("seed", 0, lambda v: None if isinstance(v, int) and not isinstance(v, bool) else f"expected integer, got {v!r}")
_rule("mock_box_size", 64.0, _positive)
_rule("workers", 1, _positive_int)


@dataclass
class RunConfig:
    kernel: int = 128
    tau: float = 0.9
    grid_s: int = 32
    grid_n: int | None = None
    cluster_radius: float | None = None
    tau_s: float = 0.3
    tau_o: float = 0.85
    no_fallback: bool = False
    top1: bool = False
    tau_cls: float = 4.0
    tau_reg: float = 1.0
    percentile: float = 90.0
    lam: float = 1.0
    scope: str = "things"
    bins: int = 20
    loss_field: str = "cls"
    iou_thresholds: tuple[float, ...] = (0.5, 0.75, 0.9)
    corloc_iou: float = 0.5
    pgt_iou: float = 0.7
    sample: int = 200
    seed: int = 0
    mock_box_size: float = 64.0
    workers: int = 1
    provenance: dict[str, str] = field(default_factory=dict)

    @property
    def effective_cluster_radius(self) -> float:
        return self.cluster_radius if self.cluster_radius is not None else self.kernel / 2

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "provenance":
                continue
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def _normalize_key(key: str) -> str:
    key = key.replace("-", "_")
    return "lam" if key == "lambda" else key


def validate_config(
    file_values: Mapping[str, Any] | None = None,
    flag_values: Mapping[str, Any] | None = None,
) -> tuple[RunConfig, list[str]]:
    """Merge and range-check configuration, collecting every error.

    file_values come from a flat JSON config (keys mirror flag names, dashes
    or underscores both accepted); flag_values from the command line and win.
    """
    errors: list[str] = []
    resolved: dict[str, Any] = {}
    provenance: dict[str, str] = {}
    file_values = {_normalize_key(k): v for k, v in (file_values or {}).items()}
    flag_values = {_normalize_key(k): v for k, v in (flag_values or {}).items()}
    for key in file_values:
        if key not in _RANGES:
            errors.append(f"{key}: unknown configuration field")
    for name, (default, check) in _RANGES.items():
        if name in flag_values and flag_values[name] is not None:
            value, source = flag_values[name], "flag"
        elif name in file_values:
            value, source = file_values[name], "config-file"
        else:
            value, source = default, "default"
        if isinstance(value, list) and name == "iou_thresholds":
            value = tuple(value)
        if isinstance(value, float) and value.is_integer() and name in (
            "kernel", "grid_s", "grid_n", "bins", "sample", "seed", "workers",
        ):
            value = int(value)
        problem = check(value)
        if problem is not None:
            errors.append(f"{name}: {problem}")
            value = default
        resolved[name] = value
        provenance[name] = source
    cfg = RunConfig(**resolved, provenance=provenance)
    return cfg, errors
