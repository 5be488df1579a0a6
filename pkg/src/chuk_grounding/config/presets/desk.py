"""Desk preset - the default single-core configuration."""

from chuk_grounding.config.base import RunConfig

DESK_CONFIG = RunConfig(preset="desk")
