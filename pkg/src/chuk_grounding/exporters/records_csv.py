"""
Per-sample evaluation records as CSV.
"""

import csv
import io
from collections.abc import Iterable

from chuk_grounding.evaluation import EvalRecord

CSV_HEADER = ("id", "rec_iou", "res_iou", "split")


def export_records_csv(records: Iterable[EvalRecord]) -> str:
    """One row per record under the header ``id,rec_iou,res_iou,split``; floats use ``repr``."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in records:
        writer.writerow([record.id, repr(record.rec_iou), repr(record.res_iou), record.split])
    return buffer.getvalue()
