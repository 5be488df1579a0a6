"""
Adaptive soft alignment between the mask branch and the box branch.

The box branch's query mask supervises the predicted superpoint mask through
a focal term weighted per superpoint by how decided the query mask is, and a
dice term weighted by how compact the selected superpoints are. A confidence
predicted from the mask branch blends the two masks into the final one.
"""

import math
from typing import Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel

from chuk_grounding.config import AsaConfig
from chuk_grounding.errors import DimensionError, PreconditionError
from chuk_grounding.numeric import FloatArray, Node, Tape, as_matrix

AdaptiveLosses = Literal["on", "off", "point", "mask"]


# ============================================================================
# QUALITY WEIGHTS
# ============================================================================


def _gaussian_scale(cfg: AsaConfig) -> float:
    return 1.0 / math.sqrt(2.0 * math.pi * cfg.sigma2)


def w_focal(probabilities: npt.ArrayLike, cfg: AsaConfig) -> FloatArray:
    """
    ``b - exp(-(x - mu)^2 / (2 sigma^2)) / (sqrt(2 pi) sigma)`` elementwise.

    With the default constants the range over [0, 1] is [0.738434, 1.638555],
    lowest at 0.5 where the query mask is least decided.
    """
    x = np.asarray(probabilities, dtype=np.float64)
    bump = np.exp(-((x - cfg.mu) ** 2) / (2.0 * cfg.sigma2))
    return cfg.b - _gaussian_scale(cfg) * bump


def w_focal_node(tape: Tape, probabilities: Node, cfg: AsaConfig) -> Node:
    """``w_focal`` recorded on the tape, for runs that let gradient reach the weights."""
    diff = tape.add_scalar(probabilities, -cfg.mu)
    bump = tape.exp(tape.scale(tape.mul(diff, diff), -1.0 / (2.0 * cfg.sigma2)))
    return tape.add_scalar(tape.scale(bump, -_gaussian_scale(cfg)), cfg.b)


def w_dice(selected: npt.ArrayLike, centers: npt.ArrayLike) -> float:
    """
    ``1 / (1 + mean distance)`` over unordered pairs of selected superpoint centers.

    One or no selected superpoint gives 1.0.
    """
    bits = np.asarray(selected).reshape(-1) >= 0.5
    points = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if bits.size != points.shape[0]:
        raise DimensionError(f"mask of {bits.size} superpoints vs {points.shape[0]} centers")
    chosen = points[bits]
    count = chosen.shape[0]
    if count <= 1:
        return 1.0
    diffs = chosen[:, None, :] - chosen[None, :, :]
    distances = np.sqrt((diffs**2).sum(axis=2))
    upper = np.triu_indices(count, k=1)
    return 1.0 / (1.0 + float(distances[upper].mean()))


# ============================================================================
# MASK LOSSES
# ============================================================================


def _check_lengths(pred: Node, target: FloatArray) -> FloatArray:
    t = as_matrix(target).reshape(1, -1)
    if t.size != pred.value.size:
        raise DimensionError(f"mask lengths differ: {pred.value.size} vs {t.size}")
    return t.reshape(pred.shape)


def focal_loss(tape: Tape, pred: Node, target: npt.ArrayLike, cfg: AsaConfig) -> Node:
    """Mean focal loss over superpoints."""
    t = _check_lengths(pred, np.asarray(target, dtype=np.float64))
    return tape.mean(tape.focal_terms(pred, t, cfg.focal_gamma, cfg.focal_alpha))


def point_weighted_focal(
    tape: Tape,
    pred: Node,
    target: npt.ArrayLike,
    quality: Node,
    cfg: AsaConfig,
) -> Node:
    """
    ``sum_i w_focal(quality_i) * focal(pred_i, target_i) / m``.

    ``quality`` holds the query-mask probabilities; with ``stop_weight_grad``
    the weights are constants.
    """
    t = _check_lengths(pred, np.asarray(target, dtype=np.float64))
    if quality.shape != pred.shape:
        raise DimensionError(f"quality shape {quality.shape} vs mask shape {pred.shape}")
    if cfg.stop_weight_grad:
        weights = tape.constant(w_focal(quality.value, cfg))
    else:
        weights = w_focal_node(tape, quality, cfg)
    terms = tape.focal_terms(pred, t, cfg.focal_gamma, cfg.focal_alpha)
    return tape.scale(tape.sum(tape.mul(weights, terms)), 1.0 / pred.value.size)


def dice_loss(tape: Tape, pred: Node, target: npt.ArrayLike, eps: float = 1.0) -> Node:
    """``1 - (2 sum(p t) + eps) / (sum(p) + sum(t) + eps)``."""
    t = _check_lengths(pred, np.asarray(target, dtype=np.float64))
    overlap = tape.sum(tape.mul(pred, tape.constant(t)))
    numerator = tape.add_scalar(tape.scale(overlap, 2.0), eps)
    denominator = tape.add_scalar(tape.sum(pred), float(t.sum()) + eps)
    return tape.add_scalar(tape.scale(tape.div(numerator, denominator), -1.0), 1.0)


def mask_weighted_dice(
    tape: Tape,
    pred: Node,
    target: npt.ArrayLike,
    centers: npt.ArrayLike,
    cfg: AsaConfig,
) -> Node:
    """Dice against the query mask, scaled by the compactness weight of its superpoints."""
    return tape.scale(dice_loss(tape, pred, target, cfg.dice_eps), w_dice(target, centers))


def fuse_masks(tape: Tape, mask_probs: Node, query_probs: Node, confidence: Node) -> Node:
    """``mu * M_p + (1 - mu) * M_q`` with ``mu`` a ``1 x 1`` node."""
    keep = tape.mul(confidence, mask_probs)
    rest = tape.add_scalar(tape.scale(confidence, -1.0), 1.0)
    return tape.add(keep, tape.mul(rest, query_probs))


# ============================================================================
# COMPOSITION
# ============================================================================


class ResLossTerms(BaseModel):
    """Unweighted focal and dice terms; terms a run does not use stay 0."""

    focal_mp: float = 0.0
    focal_mq: float = 0.0
    focal_fin: float = 0.0
    focal_point: float = 0.0
    dice_mp: float = 0.0
    dice_mq: float = 0.0
    dice_fin: float = 0.0
    dice_mask: float = 0.0

    @property
    def focal_sum(self) -> float:
        return self.focal_mp + self.focal_mq + self.focal_fin + self.focal_point

    @property
    def dice_sum(self) -> float:
        return self.dice_mp + self.dice_mq + self.dice_fin + self.dice_mask

    def weighted(self, cfg: AsaConfig) -> float:
        return cfg.beta1 * self.focal_sum + cfg.beta2 * self.dice_sum


def _sum_nodes(tape: Tape, nodes: list[Node]) -> Node:
    total = nodes[0]
    for node in nodes[1:]:
        total = tape.add(total, node)
    return total


def res_loss(
    tape: Tape,
    mask_probs: Node,
    query_probs: Node,
    align_target: npt.ArrayLike,
    align_quality: Node,
    fused: Node | None,
    gt: npt.ArrayLike,
    centers: npt.ArrayLike,
    cfg: AsaConfig,
    adaptive: AdaptiveLosses = "on",
    asa: bool = True,
) -> tuple[Node, ResLossTerms]:
    """
    ``beta1 * (focal terms) + beta2 * (dice terms)`` of the mask branch.

    Both masks are always supervised by ``gt``. With ``asa`` the fused mask
    is too, and the predicted mask is aligned to ``align_target`` (the
    binary query mask or the in-box superpoints); ``adaptive`` picks which
    alignment terms carry their quality weights.
    """
    gt_bits = np.asarray(gt, dtype=np.float64)
    focal = [
        focal_loss(tape, mask_probs, gt_bits, cfg),
        focal_loss(tape, query_probs, gt_bits, cfg),
    ]
    dice = [
        dice_loss(tape, mask_probs, gt_bits, cfg.dice_eps),
        dice_loss(tape, query_probs, gt_bits, cfg.dice_eps),
    ]

    if asa:
        if fused is None:
            raise PreconditionError("the fused mask is required when alignment is on")
        target = np.asarray(align_target, dtype=np.float64)
        focal.append(focal_loss(tape, fused, gt_bits, cfg))
        dice.append(dice_loss(tape, fused, gt_bits, cfg.dice_eps))
        if adaptive in ("on", "point"):
            focal.append(point_weighted_focal(tape, mask_probs, target, align_quality, cfg))
        else:
            focal.append(focal_loss(tape, mask_probs, target, cfg))
        if adaptive in ("on", "mask"):
            dice.append(mask_weighted_dice(tape, mask_probs, target, centers, cfg))
        else:
            dice.append(dice_loss(tape, mask_probs, target, cfg.dice_eps))

    terms = ResLossTerms(
        focal_mp=focal[0].item(),
        focal_mq=focal[1].item(),
        dice_mp=dice[0].item(),
        dice_mq=dice[1].item(),
    )
    if asa:
        terms = terms.model_copy(
            update={
                "focal_fin": focal[2].item(),
                "focal_point": focal[3].item(),
                "dice_fin": dice[2].item(),
                "dice_mask": dice[3].item(),
            }
        )

    loss = tape.add(
        tape.scale(_sum_nodes(tape, focal), cfg.beta1),
        tape.scale(_sum_nodes(tape, dice), cfg.beta2),
    )
    return loss, terms


def total_loss(
    tape: Tape,
    rec: Node,
    res: Node,
    cfg: AsaConfig,
    rec_layers: int,
    keypoints: Node | None = None,
) -> Node:
    """``gamma1 * L_rec + gamma2 * L_res + gamma3 * L_kps``; the last term is 0 when omitted."""
    total = tape.add(tape.scale(rec, cfg.gamma1(rec_layers)), tape.scale(res, cfg.gamma2))
    if keypoints is not None:
        total = tape.add(total, tape.scale(keypoints, cfg.gamma3))
    return total
