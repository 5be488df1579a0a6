"""Tests for the grounding metrics."""

import pytest
from pydantic import ValidationError

from chuk_grounding.errors import EmptyEvaluationError, PreconditionError
from chuk_grounding.evaluation import (
    EvalRecord,
    SplitMetrics,
    acc_at_iou,
    build_report,
    die3,
    is_conflict,
    merge_reports,
    miou,
)


def _record(rec: float, res: float, split: str = "unique", rid: str = "r") -> EvalRecord:
    return EvalRecord(id=rid, rec_iou=rec, res_iou=res, split=split)


def test_acc_at_iou():
    """Test the fraction of records at or above the threshold."""
    records = [_record(0.3, 0.0), _record(0.6, 0.0)]
    assert acc_at_iou(records, 0.5) == 0.5
    assert acc_at_iou(records, 0.25) == 1.0


def test_acc_threshold_is_inclusive():
    """Test an IoU equal to the threshold counts as a hit."""
    assert acc_at_iou([_record(0.5, 0.0)], 0.5) == 1.0


def test_acc_on_mask_branch():
    """Test accuracy over the mask IoUs."""
    records = [_record(0.9, 0.1), _record(0.9, 0.7)]
    assert acc_at_iou(records, 0.5, branch="res") == 0.5


def test_acc_threshold_range():
    """Test thresholds outside (0, 1) are rejected."""
    with pytest.raises(PreconditionError):
        acc_at_iou([_record(0.5, 0.5)], 1.0)
    with pytest.raises(PreconditionError):
        acc_at_iou([_record(0.5, 0.5)], 0.0)


def test_miou():
    """Test the mean mask IoU."""
    assert miou([_record(0.0, 0.2), _record(0.0, 0.4)]) == pytest.approx(0.3)


@pytest.mark.parametrize(
    "rec, res, expected",
    [
        (0.6, 0.1, True),
        (0.1, 0.6, True),
        (0.5, 0.1, False),
        (0.6, 0.25, False),
        (0.6, 0.6, False),
        (0.1, 0.1, False),
    ],
)
def test_is_conflict(rec, res, expected):
    """Test both strict thresholds of the conflict rule."""
    assert is_conflict(rec, res) is expected


def test_die3():
    """Test the conflict rate."""
    records = [_record(0.6, 0.1), _record(0.5, 0.1), _record(0.6, 0.6), _record(0.1, 0.9)]
    assert die3(records) == 0.5


def test_empty_records():
    """Test every metric refuses zero records."""
    for fn in (miou, die3, build_report):
        with pytest.raises(EmptyEvaluationError):
            fn([])
    with pytest.raises(EmptyEvaluationError):
        acc_at_iou([], 0.5)


def test_iou_range_validated():
    """Test IoUs outside [0, 1] are rejected."""
    with pytest.raises(ValidationError):
        _record(1.2, 0.0)


class TestReport:
    """Tests for the overall and per-split report."""

    def test_splits(self):
        """Test per-split counts and metrics."""
        records = [
            _record(0.9, 0.8, "unique", "a"),
            _record(0.1, 0.6, "multiple", "b"),
            _record(0.3, 0.2, "multiple", "c"),
        ]
        report = build_report(records)
        assert report.count == 3
        assert report.unique.count == 1
        assert report.multiple.count == 2
        assert report.unique.rec_acc_05 == 1.0
        assert report.multiple.rec_acc_025 == 0.5
        assert report.multiple.die3 == 0.5
        assert report.miou == pytest.approx((0.8 + 0.6 + 0.2) / 3)

    def test_empty_split_is_null(self):
        """Test a split without records has null metrics."""
        report = build_report([_record(0.9, 0.8, "unique")])
        assert report.multiple == SplitMetrics()
        assert report.multiple.miou is None

    def test_merge_matches_joint_report(self):
        """Test merging two reports equals the report of all records."""
        first = [_record(0.9, 0.8, "unique", "a"), _record(0.2, 0.6, "multiple", "b")]
        second = [_record(0.4, 0.1, "multiple", "c")]
        merged = merge_reports(build_report(first), build_report(second))
        joint = build_report(first + second)
        assert merged.count == joint.count
        assert merged.miou == pytest.approx(joint.miou)
        assert merged.rec_acc_025 == pytest.approx(joint.rec_acc_025)
        assert merged.multiple.die3 == pytest.approx(joint.multiple.die3)
        assert merged.unique.count == 1
