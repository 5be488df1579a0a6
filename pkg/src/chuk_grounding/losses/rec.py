"""
Box-branch loss: center and size smooth-L1, 1 - GIoU and the score
cross-entropy, computed on every decoder layer and averaged.
"""

from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel

from chuk_grounding.config import RecLossWeights
from chuk_grounding.errors import PreconditionError
from chuk_grounding.geometry import Aabb, box_iou_many
from chuk_grounding.numeric import Node, Tape

if TYPE_CHECKING:
    from chuk_grounding.model.rec_branch import BoxPrediction


class RecLayerTerms(BaseModel):
    """Unweighted terms of one decoder layer."""

    center: float
    size: float
    giou: float
    score: float

    def weighted(self, weights: RecLossWeights) -> float:
        return (
            weights.alpha1 * self.center
            + weights.alpha2 * self.size
            + weights.alpha3 * self.giou
            + weights.alpha4 * self.score
        )


def _volume(tape: Tape, extent: Node) -> Node:
    """Product of the three columns of a ``1 x 3`` node."""
    x = tape.slice_cols(extent, 0, 1)
    y = tape.slice_cols(extent, 1, 2)
    z = tape.slice_cols(extent, 2, 3)
    return tape.mul(tape.mul(x, y), z)


def giou_loss(tape: Tape, center: Node, size: Node, gt: Aabb) -> Node:
    """``1 - GIoU`` of one predicted box (``1 x 3`` center and size) against ``gt``."""
    half = tape.scale(size, 0.5)
    low = tape.sub(center, half)
    high = tape.add(center, half)
    gt_low = tape.constant(gt.low.reshape(1, 3))
    gt_high = tape.constant(gt.high.reshape(1, 3))

    overlap = tape.clamp_min(tape.sub(tape.minimum(high, gt_high), tape.maximum(low, gt_low)), 0.0)
    inter = _volume(tape, overlap)
    union = tape.add_scalar(tape.sub(_volume(tape, size), inter), gt.volume)
    enclosing = _volume(tape, tape.sub(tape.maximum(high, gt_high), tape.minimum(low, gt_low)))

    iou = tape.div(inter, union)
    penalty = tape.div(tape.sub(enclosing, union), enclosing)
    return tape.add_scalar(tape.scale(tape.sub(iou, penalty), -1.0), 1.0)


def assign_positive(prediction: "BoxPrediction", gt: Aabb) -> int:
    """The query whose box overlaps ``gt`` most (lowest index on ties)."""
    ious = box_iou_many(prediction.boxes(), gt)
    return int(np.argmax(ious))


def rec_layer_loss(
    tape: Tape,
    prediction: "BoxPrediction",
    positive: int,
    gt: Aabb,
    weights: RecLossWeights,
) -> tuple[Node, RecLayerTerms]:
    """Weighted loss of one layer with query ``positive`` as the referent."""
    center = tape.index_rows(prediction.centers, [positive])
    size = tape.index_rows(prediction.sizes, [positive])
    beta = weights.smooth_l1_beta

    center_term = tape.sum(
        tape.smooth_l1(tape.sub(center, tape.constant(np.reshape(gt.center, (1, 3)))), beta)
    )
    size_term = tape.sum(
        tape.smooth_l1(tape.sub(size, tape.constant(np.reshape(gt.size, (1, 3)))), beta)
    )
    giou_term = giou_loss(tape, center, size, gt)
    log_probs = tape.log_softmax_rows(prediction.scores)
    score_term = tape.scale(tape.slice_cols(log_probs, positive, positive + 1), -1.0)

    loss = tape.add(
        tape.add(tape.scale(center_term, weights.alpha1), tape.scale(size_term, weights.alpha2)),
        tape.add(tape.scale(giou_term, weights.alpha3), tape.scale(score_term, weights.alpha4)),
    )
    terms = RecLayerTerms(
        center=center_term.item(),
        size=size_term.item(),
        giou=giou_term.item(),
        score=score_term.item(),
    )
    return loss, terms


def rec_losses(
    tape: Tape,
    predictions: Sequence["BoxPrediction"],
    gt: Aabb,
    weights: RecLossWeights,
    positive: int | None = None,
) -> tuple[Node, list[RecLayerTerms], int]:
    """
    ``L_rec``: the mean over decoder layers of the per-layer loss.

    The positive query is assigned once, from the last layer's boxes, and
    supervised on every layer.

    Returns:
        The loss node, the per-layer terms and the positive query index
    """
    if not predictions:
        raise PreconditionError("rec_losses needs at least one decoder layer")
    index = assign_positive(predictions[-1], gt) if positive is None else positive

    total: Node | None = None
    layers = []
    for prediction in predictions:
        loss, terms = rec_layer_loss(tape, prediction, index, gt, weights)
        total = loss if total is None else tape.add(total, loss)
        layers.append(terms)
    assert total is not None
    return tape.scale(total, 1.0 / len(predictions)), layers, index
