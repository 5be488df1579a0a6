"""
Grounding metrics: accuracy at an IoU threshold, mean mask IoU and the
rate of samples where the two branches disagree.
"""

from collections.abc import Sequence
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from chuk_grounding.data import Split
from chuk_grounding.errors import EmptyEvaluationError, PreconditionError

Branch = Literal["rec", "res"]

CONFLICT_HIGH = 0.5
CONFLICT_LOW = 0.25
SPLITS: tuple[Split, ...] = ("unique", "multiple")


class EvalRecord(BaseModel):
    """Box IoU and point-mask IoU of one sample against its ground truth."""

    id: str
    rec_iou: float = Field(..., ge=0.0, le=1.0)
    res_iou: float = Field(..., ge=0.0, le=1.0)
    split: Split


class SplitMetrics(BaseModel):
    """Metrics over one group of records; every rate is None when the group is empty."""

    count: int = Field(default=0, ge=0)
    rec_acc_025: float | None = None
    rec_acc_05: float | None = None
    res_acc_025: float | None = None
    res_acc_05: float | None = None
    miou: float | None = None
    die3: float | None = None


class Report(SplitMetrics):
    """Overall metrics plus the unique and multiple breakdowns."""

    unique: SplitMetrics = Field(default_factory=SplitMetrics)
    multiple: SplitMetrics = Field(default_factory=SplitMetrics)


def _require(records: Sequence[EvalRecord], what: str) -> None:
    if not records:
        raise EmptyEvaluationError(f"{what} over zero records")


def acc_at_iou(records: Sequence[EvalRecord], threshold: float, branch: Branch = "rec") -> float:
    """
    Fraction of records whose IoU reaches ``threshold``.

    Raises:
        EmptyEvaluationError: If there are no records
        PreconditionError: If the threshold is outside (0, 1)
    """
    _require(records, "accuracy")
    if not 0.0 < threshold < 1.0:
        raise PreconditionError(f"IoU threshold must lie in (0, 1), got {threshold}")
    ious = np.array([r.rec_iou if branch == "rec" else r.res_iou for r in records])
    return float(np.mean(ious >= threshold))


def miou(records: Sequence[EvalRecord]) -> float:
    """Mean point-mask IoU."""
    _require(records, "mIoU")
    return float(np.mean([r.res_iou for r in records]))


def is_conflict(rec_iou: float, res_iou: float) -> bool:
    """One branch above 0.5 while the other is below 0.25 (both strict)."""
    return (rec_iou > CONFLICT_HIGH and res_iou < CONFLICT_LOW) or (
        res_iou > CONFLICT_HIGH and rec_iou < CONFLICT_LOW
    )


def die3(records: Sequence[EvalRecord]) -> float:
    """Fraction of records where the box and mask predictions conflict."""
    _require(records, "inconsistency rate")
    return float(np.mean([is_conflict(r.rec_iou, r.res_iou) for r in records]))


def _split_metrics(records: Sequence[EvalRecord]) -> SplitMetrics:
    if not records:
        return SplitMetrics()
    return SplitMetrics(
        count=len(records),
        rec_acc_025=acc_at_iou(records, 0.25, "rec"),
        rec_acc_05=acc_at_iou(records, 0.5, "rec"),
        res_acc_025=acc_at_iou(records, 0.25, "res"),
        res_acc_05=acc_at_iou(records, 0.5, "res"),
        miou=miou(records),
        die3=die3(records),
    )


def build_report(records: Sequence[EvalRecord]) -> Report:
    """Every metric overall and per split."""
    _require(records, "report")
    overall = _split_metrics(records)
    groups = {split: [r for r in records if r.split == split] for split in SPLITS}
    return Report(
        **overall.model_dump(),
        unique=_split_metrics(groups["unique"]),
        multiple=_split_metrics(groups["multiple"]),
    )


def _merge_metrics(a: SplitMetrics, b: SplitMetrics) -> SplitMetrics:
    total = a.count + b.count
    if total == 0:
        return SplitMetrics()
    merged: dict[str, float | int | None] = {"count": total}
    for key in SplitMetrics.model_fields:
        if key == "count":
            continue
        weighted = sum(getattr(part, key) * part.count for part in (a, b) if part.count > 0)
        merged[key] = weighted / total
    return SplitMetrics.model_validate(merged)


def merge_reports(a: Report, b: Report) -> Report:
    """Count-weighted combination of the reports of two disjoint record sets."""
    overall = _merge_metrics(a, b)
    return Report(
        **overall.model_dump(),
        unique=_merge_metrics(a.unique, b.unique),
        multiple=_merge_metrics(a.multiple, b.multiple),
    )
