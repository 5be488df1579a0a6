"""Configuration presets package."""

from chuk_grounding.config.presets.desk import DESK_CONFIG
from chuk_grounding.config.presets.paper_scale import PAPER_SCALE_CONFIG
from chuk_grounding.config.presets.toy import TOY_CONFIG

__all__ = [
    "DESK_CONFIG",
    "PAPER_SCALE_CONFIG",
    "TOY_CONFIG",
]
