"""
Metrics report JSON exporter.

Top-level keys are the overall metrics (``rec_acc_025``, ``rec_acc_05``,
``res_acc_025``, ``res_acc_05``, ``miou``, ``die3``, ``count``) with the same
keys repeated under ``unique`` and ``multiple``; empty splits carry nulls.
"""

import json

from pydantic import ValidationError

from chuk_grounding.errors import DatasetFormatError
from chuk_grounding.evaluation import Report


def export_report_json(report: Report, pretty: bool = True) -> str:
    """
    Export a report to JSON.

    Args:
        report: Report built from evaluation records
        pretty: Pretty-print JSON (default: True)

    Returns:
        JSON string
    """
    return json.dumps(report.model_dump(), indent=2 if pretty else None, sort_keys=pretty)


def parse_report_json(text: str) -> Report:
    """
    Parse a report written by ``export_report_json``.

    Raises:
        DatasetFormatError: If the text is not a valid report
    """
    try:
        return Report.model_validate_json(text)
    except ValidationError as exc:
        raise DatasetFormatError(1, f"not a metrics report: {exc}") from exc
