"""
Training loop.

Each optimizer step averages the gradients of one batch: every sample gets
its own tape, and its backward pass is seeded with ``1 / batch size`` so
the gradients accumulate to the batch mean. Samples are visited in an order
drawn from a seeded generator, so a run is fully determined by its config.
"""

import json
import logging
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from chuk_grounding.config import RunConfig
from chuk_grounding.data import SceneSample
from chuk_grounding.errors import NonFiniteLossError, PreconditionError
from chuk_grounding.model import GroundingModel, LossBreakdown
from chuk_grounding.numeric import AdamW, Tape
from chuk_grounding.pipeline.checkpoint import (
    Checkpoint,
    make_checkpoint,
    restore_training,
    shuffle_rng,
)
from chuk_grounding.pipeline.evaluate import evaluate_model

logger = logging.getLogger(__name__)

VAL_KEYS = ("rec_acc_025", "rec_acc_05", "res_acc_025", "res_acc_05", "miou", "die3")


class EpochLog(BaseModel):
    """One line of the metrics log."""

    epoch: int
    loss_total: float
    loss_rec: float
    loss_res: float
    loss_align_focal: float
    loss_align_dice: float
    val: dict[str, float | None] | None = None


class TrainResult(BaseModel):
    checkpoint: Checkpoint
    log: list[EpochLog]


def _finite(breakdown: LossBreakdown) -> bool:
    return all(math.isfinite(value) for value in breakdown.components().values())


def train_step(
    model: GroundingModel, optimizer: AdamW, batch: Sequence[SceneSample]
) -> list[LossBreakdown]:
    """
    Accumulate the batch-mean gradient and apply one optimizer update.

    Raises:
        NonFiniteLossError: If a sample's loss is NaN or Inf; no update is applied
    """
    if not batch:
        raise PreconditionError("a training step needs at least one sample")
    model.store.zero_grad()
    breakdowns = []
    for sample in batch:
        tape = Tape()
        loss, breakdown = model.loss(tape, sample)
        if not _finite(breakdown):
            model.store.zero_grad()
            logger.error("non-finite loss on sample %s: %s", sample.id, breakdown.components())
            raise NonFiniteLossError(sample.id, breakdown.components())
        tape.backward(loss, seed=1.0 / len(batch))
        breakdowns.append(breakdown)
    optimizer.step()
    return breakdowns


def _epoch_log(epoch: int, breakdowns: Sequence[LossBreakdown]) -> EpochLog:
    components = [b.components() for b in breakdowns]
    means = {key: float(np.mean([c[key] for c in components])) for key in components[0]}
    return EpochLog(epoch=epoch, **means)


def train(
    config: RunConfig,
    train_samples: Sequence[SceneSample],
    val_samples: Sequence[SceneSample] | None = None,
    resume: Checkpoint | None = None,
    log_path: str | Path | None = None,
) -> TrainResult:
    """
    Train for ``config.optim.epochs`` epochs.

    With ``resume`` the run continues after the stored epoch with the stored
    parameters, optimizer moments and shuffling state, reproducing the
    uninterrupted run. With ``log_path`` each epoch is appended to a JSON
    Lines metrics log as it finishes.

    Raises:
        PreconditionError: If there are no training samples
        NonFiniteLossError: If any sample's loss becomes NaN or Inf
    """
    if not train_samples:
        raise PreconditionError("training needs at least one sample")

    if resume is not None:
        model, optimizer, rng = restore_training(resume)
        model.config = model.config.model_copy(update={"optim": config.optim})
        start = resume.epoch
    else:
        model = GroundingModel(config)
        optimizer = model.optimizer()
        rng = shuffle_rng(config.seed)
        start = 0

    log_file = Path(log_path) if log_path is not None else None
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        if resume is None:
            log_file.write_text("", encoding="utf-8")

    batch_size = config.optim.batch_size
    log: list[EpochLog] = []
    for epoch in range(start + 1, config.optim.epochs + 1):
        order = rng.permutation(len(train_samples))
        breakdowns: list[LossBreakdown] = []
        for begin in range(0, len(order), batch_size):
            batch = [train_samples[i] for i in order[begin : begin + batch_size]]
            breakdowns.extend(train_step(model, optimizer, batch))

        entry = _epoch_log(epoch, breakdowns)
        if val_samples:
            report, _ = evaluate_model(model, val_samples)
            entry.val = {key: getattr(report, key) for key in VAL_KEYS}
        log.append(entry)
        logger.info(
            "epoch %d/%d loss=%.4f rec=%.4f res=%.4f",
            epoch,
            config.optim.epochs,
            entry.loss_total,
            entry.loss_rec,
            entry.loss_res,
        )
        if log_file is not None:
            with log_file.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(entry.model_dump()) + "\n")

    checkpoint = make_checkpoint(model, optimizer, max(start, config.optim.epochs), rng)
    return TrainResult(checkpoint=checkpoint, log=log)
