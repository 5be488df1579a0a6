"""
Evaluation of a model or checkpoint on a list of samples.
"""

import logging
from collections.abc import Sequence

from chuk_grounding.config import RunConfig
from chuk_grounding.data import SceneSample, anonymize_expression
from chuk_grounding.errors import ConfigError
from chuk_grounding.evaluation import EvalRecord, Report, build_report
from chuk_grounding.geometry import box_iou_3d, mask_iou
from chuk_grounding.model import GroundingModel, Prediction
from chuk_grounding.pipeline.checkpoint import Checkpoint, restore_model

logger = logging.getLogger(__name__)


def _unit(value: float) -> float:
    return min(1.0, max(0.0, value))


def record_for(sample: SceneSample, prediction: Prediction) -> EvalRecord:
    """Box IoU of the selected box and point IoU of the final mask."""
    return EvalRecord(
        id=sample.id,
        rec_iou=_unit(box_iou_3d(prediction.box, sample.gt_box)),
        res_iou=_unit(mask_iou(prediction.point_mask, sample.gt_point_mask)),
        split=sample.split,
    )


def oracle_record(sample: SceneSample) -> EvalRecord:
    """The record a prediction equal to the ground truth would get."""
    oracle = Prediction(
        box=sample.gt_box,
        selected=0,
        superpoint_mask=sample.gt_superpoint_mask,
        point_mask=sample.gt_point_mask,
    )
    return record_for(sample, oracle)


def check_compatible(config: RunConfig, samples: Sequence[SceneSample], vocab_size: int) -> None:
    """
    Raises:
        ConfigError: If a sample's cloud size, expression length or token ids do not fit
    """
    dims = config.dims
    for sample in samples:
        if sample.cloud.size != dims.n_points:
            raise ConfigError(
                f"sample '{sample.id}' has {sample.cloud.size} points, "
                f"the model was built for {dims.n_points}"
            )
        if dims.text_positional and len(sample.tokens) > dims.max_tokens:
            raise ConfigError(
                f"sample '{sample.id}' has {len(sample.tokens)} tokens, "
                f"the model allows {dims.max_tokens}"
            )
        if max(sample.tokens) >= vocab_size:
            raise ConfigError(
                f"sample '{sample.id}' uses token id {max(sample.tokens)}, "
                f"the model vocabulary has {vocab_size}"
            )


def evaluate_records(
    model: GroundingModel, samples: Sequence[SceneSample], hide_object_name: bool = False
) -> list[EvalRecord]:
    """One record per sample; with ``hide_object_name`` the shape word becomes ``object``."""
    check_compatible(model.config, samples, model.vocab_size)
    records = []
    for sample in samples:
        tokens = anonymize_expression(sample.tokens) if hide_object_name else None
        records.append(record_for(sample, model.predict(sample, tokens)))
    return records


def evaluate_model(
    model: GroundingModel, samples: Sequence[SceneSample], hide_object_name: bool = False
) -> tuple[Report, list[EvalRecord]]:
    records = evaluate_records(model, samples, hide_object_name)
    report = build_report(records)
    logger.info(
        "evaluated %d samples: rec_acc_05=%.3f miou=%.3f die3=%.3f",
        report.count,
        report.rec_acc_05,
        report.miou,
        report.die3,
    )
    return report, records


def evaluate(
    checkpoint: Checkpoint, samples: Sequence[SceneSample], hide_object_name: bool = False
) -> tuple[Report, list[EvalRecord]]:
    """
    Rebuild the checkpoint's model and evaluate it.

    Raises:
        ConfigError: If the samples do not fit the checkpoint's dimensions
        EmptyEvaluationError: If there are no samples
    """
    return evaluate_model(restore_model(checkpoint), samples, hide_object_name)
