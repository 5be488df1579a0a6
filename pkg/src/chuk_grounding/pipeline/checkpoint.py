"""
Checkpoint files: configuration, parameters, optimizer moments, epoch and
the shuffling RNG state in one JSON document.

Written with the standard JSON encoder: floats keep ``repr`` precision, so
loading a saved checkpoint restores every parameter bit for bit, and the
128-bit generator state survives as plain integers.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from chuk_grounding.config import RunConfig
from chuk_grounding.errors import ConfigError, UnsupportedVersionError
from chuk_grounding.model import GroundingModel
from chuk_grounding.numeric import AdamW

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class Checkpoint(BaseModel):
    """Everything needed to resume training or to evaluate."""

    version: int = CHECKPOINT_VERSION
    config: RunConfig
    params: dict[str, list[list[float]]]
    optimizer: dict[str, Any] = Field(default_factory=dict)
    epoch: int = Field(default=0, ge=0)
    rng_state: dict[str, Any] = Field(default_factory=dict)


def make_checkpoint(
    model: GroundingModel,
    optimizer: AdamW | None = None,
    epoch: int = 0,
    rng: np.random.Generator | None = None,
) -> Checkpoint:
    return Checkpoint(
        config=model.config,
        params=model.store.to_lists(),
        optimizer=optimizer.state_dict() if optimizer is not None else {},
        epoch=epoch,
        rng_state=dict(rng.bit_generator.state) if rng is not None else {},
    )


def restore_model(checkpoint: Checkpoint) -> GroundingModel:
    """
    Rebuild the model from the echoed config and load its parameters.

    Raises:
        ConfigError: If the stored parameters do not fit the config's shapes
    """
    model = GroundingModel(checkpoint.config)
    model.store.load_lists(checkpoint.params)
    return model


def restore_training(
    checkpoint: Checkpoint,
) -> tuple[GroundingModel, AdamW, np.random.Generator]:
    """Model, optimizer and shuffling RNG exactly as they were when the checkpoint was made."""
    model = restore_model(checkpoint)
    optimizer = model.optimizer()
    if checkpoint.optimizer:
        optimizer.load_state_dict(checkpoint.optimizer)
    rng = shuffle_rng(checkpoint.config.seed)
    if checkpoint.rng_state:
        rng.bit_generator.state = checkpoint.rng_state
    return model, optimizer, rng


def shuffle_rng(seed: int) -> np.random.Generator:
    """The generator that orders training samples, independent of parameter initialisation."""
    return np.random.default_rng([seed, 1])


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> Path:
    """Write atomically (temporary sibling, then rename)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(json.dumps(checkpoint.model_dump()))
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.info("saved checkpoint (epoch %d) to %s", checkpoint.epoch, target)
    return target


def load_checkpoint(path: str | Path) -> Checkpoint:
    """
    Read a checkpoint file.

    Raises:
        UnsupportedVersionError: If the file has another format version
        ConfigError: If the file is not a valid checkpoint
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not a checkpoint ({exc.msg})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: not a checkpoint")
    version = raw.get("version")
    if version != CHECKPOINT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: checkpoint version {version!r}, expected {CHECKPOINT_VERSION}"
        )
    try:
        return Checkpoint.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path}: invalid checkpoint: {str(exc).splitlines()[0]}") from exc
