"""
Ablation comparison JSON exporter.
"""

import json

from pydantic import BaseModel


def export_ablation_json(report: BaseModel, pretty: bool = True) -> str:
    """
    Export an ablation comparison (runs per setting and seed, plus mean deltas).

    Args:
        report: The comparison returned by the ablation runner
        pretty: Pretty-print JSON (default: True)

    Returns:
        JSON string
    """
    return json.dumps(report.model_dump(mode="json"), indent=2 if pretty else None)
