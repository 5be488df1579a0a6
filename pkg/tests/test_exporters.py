"""Tests for the report, record and ablation exporters."""

import json

import pytest

from chuk_grounding.errors import DatasetFormatError
from chuk_grounding.evaluation import EvalRecord, SplitMetrics, build_report
from chuk_grounding.exporters import (
    CSV_HEADER,
    export_ablation_json,
    export_records_csv,
    export_report_json,
    parse_report_json,
)
from chuk_grounding.pipeline import AblationReport, AblationRun

RECORDS = [
    EvalRecord(id="s0-00000", rec_iou=0.75, res_iou=0.5, split="unique"),
    EvalRecord(id="s0-00001", rec_iou=0.1, res_iou=0.6, split="multiple"),
]


class TestReportJson:
    """Tests for the metrics report exporter."""

    def test_keys(self):
        """Test overall keys plus the two split blocks."""
        data = json.loads(export_report_json(build_report(RECORDS)))
        for key in ("rec_acc_025", "rec_acc_05", "res_acc_025", "res_acc_05", "miou", "die3"):
            assert key in data
            assert key in data["unique"]
            assert key in data["multiple"]
        assert data["count"] == 2
        assert data["die3"] == 0.5

    def test_pretty_and_compact(self):
        """Test pretty output is indented and compact output is one line."""
        report = build_report(RECORDS)
        assert "\n" in export_report_json(report)
        assert "\n" not in export_report_json(report, pretty=False)

    def test_empty_split_serialises_nulls(self):
        """Test an empty split is written with nulls."""
        data = json.loads(export_report_json(build_report(RECORDS[:1])))
        assert data["multiple"]["miou"] is None
        assert data["multiple"]["count"] == 0

    def test_parse_round_trip(self):
        """Test a written report parses back to the same values."""
        report = build_report(RECORDS)
        assert parse_report_json(export_report_json(report)) == report

    def test_parse_rejects_garbage(self):
        """Test non-report text is a format error."""
        with pytest.raises(DatasetFormatError):
            parse_report_json('{"count": "many"}')


class TestRecordsCsv:
    """Tests for the per-sample CSV exporter."""

    def test_header_and_rows(self):
        """Test one line per record under the header."""
        lines = export_records_csv(RECORDS).splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[1] == "s0-00000,0.75,0.5,unique"
        assert lines[2] == "s0-00001,0.1,0.6,multiple"

    def test_empty(self):
        """Test no records gives only the header."""
        assert export_records_csv([]) == "id,rec_iou,res_iou,split\n"


class TestAblationJson:
    """Tests for the ablation comparison exporter."""

    def test_export(self):
        """Test runs and deltas are serialised."""
        run = AblationRun(
            setting="on",
            flags={"asa": "on"},
            seed=0,
            final_loss=1.5,
            metrics=SplitMetrics(count=2, miou=0.4, die3=0.1),
        )
        report = AblationReport(
            axis="asa",
            on_flags={"asa": "on"},
            off_flags={"asa": "off"},
            seeds=[0],
            runs=[run],
            deltas={"die3": -0.05},
            headline="die3",
        )
        data = json.loads(export_ablation_json(report))
        assert data["axis"] == "asa"
        assert data["runs"][0]["metrics"]["miou"] == 0.4
        assert data["deltas"]["die3"] == -0.05
        assert report.headline_delta == -0.05
