"""
Preset registry.

Presets are complete ``RunConfig`` values; config files start from one and
override individual keys.
"""

from typing import Any

from chuk_grounding.config.base import RunConfig
from chuk_grounding.config.presets import DESK_CONFIG, PAPER_SCALE_CONFIG, TOY_CONFIG

# Preset registry
PRESETS: dict[str, RunConfig] = {
    "desk": DESK_CONFIG,
    "paper-scale": PAPER_SCALE_CONFIG,
    "toy": TOY_CONFIG,
}

_DESCRIPTIONS = {
    "desk": "Default single-core configuration (d=32, k=8, L=2)",
    "paper-scale": "Full widths (d=288, k=256, L=6), lr 2e-4 / visual 2e-3, batch 12",
    "toy": "Tiny widths for gradient checks and smoke tests",
}


def list_presets() -> list[dict[str, Any]]:
    """
    List all available presets with their headline dimensions.

    Returns:
        List of preset summary dictionaries
    """
    return [
        {
            "name": key,
            "description": _DESCRIPTIONS[key],
            "d": config.dims.d,
            "queries": config.dims.queries,
            "rec_layers": config.dims.rec_layers,
        }
        for key, config in PRESETS.items()
    ]


def get_preset(name: str) -> RunConfig:
    """
    Get a preset by name (case-insensitive; ``_`` and ``-`` are interchangeable).

    Raises:
        ValueError: If the preset name is not found
    """
    key = name.strip().lower().replace("_", "-")
    if key not in PRESETS:
        available = ", ".join(PRESETS.keys())
        raise ValueError(f"Preset '{name}' not found. Available presets: {available}")
    return PRESETS[key].model_copy(deep=True)
