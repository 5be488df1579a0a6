"""
Evaluation package - per-sample records and the metrics report.
"""

from chuk_grounding.evaluation.metrics import (
    CONFLICT_HIGH,
    CONFLICT_LOW,
    SPLITS,
    Branch,
    EvalRecord,
    Report,
    SplitMetrics,
    acc_at_iou,
    build_report,
    die3,
    is_conflict,
    merge_reports,
    miou,
)

__all__ = [
    "CONFLICT_HIGH",
    "CONFLICT_LOW",
    "SPLITS",
    "Branch",
    "EvalRecord",
    "Report",
    "SplitMetrics",
    "acc_at_iou",
    "build_report",
    "die3",
    "is_conflict",
    "merge_reports",
    "miou",
]
