"""
Exporters package - reports, per-sample records and ablation comparisons.
"""

from chuk_grounding.exporters.report_json import export_report_json, parse_report_json
from chuk_grounding.exporters.records_csv import CSV_HEADER, export_records_csv
from chuk_grounding.exporters.ablation_json import export_ablation_json

__all__ = [
    "export_report_json",
    "parse_report_json",
    "CSV_HEADER",
    "export_records_csv",
    "export_ablation_json",
]
