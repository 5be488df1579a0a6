"""
Config package - run configuration models, presets and file loading.
"""

from chuk_grounding.config.base import (
    AblationFlags,
    AsaConfig,
    DataPaths,
    GeometryConfig,
    ModelDims,
    OptimConfig,
    RecLossWeights,
    RunConfig,
    Switch,
)
from chuk_grounding.config.registry import PRESETS, get_preset, list_presets
from chuk_grounding.config.loader import (
    Assignment,
    ConfigKey,
    apply_assignments,
    apply_flag_overrides,
    config_reference,
    load_config,
    load_model_file,
    parse_assignments,
    parse_config_text,
)

__all__ = [
    "AblationFlags",
    "AsaConfig",
    "DataPaths",
    "GeometryConfig",
    "ModelDims",
    "OptimConfig",
    "RecLossWeights",
    "RunConfig",
    "Switch",
    "PRESETS",
    "get_preset",
    "list_presets",
    "Assignment",
    "ConfigKey",
    "apply_assignments",
    "apply_flag_overrides",
    "config_reference",
    "load_config",
    "load_model_file",
    "parse_assignments",
    "parse_config_text",
]
