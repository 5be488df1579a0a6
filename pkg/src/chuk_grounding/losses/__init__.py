"""
Losses package - box-branch, mask-branch and alignment losses.
"""

from chuk_grounding.losses.rec import (
    RecLayerTerms,
    assign_positive,
    giou_loss,
    rec_layer_loss,
    rec_losses,
)
from chuk_grounding.losses.asa import (
    AdaptiveLosses,
    ResLossTerms,
    dice_loss,
    focal_loss,
    fuse_masks,
    mask_weighted_dice,
    point_weighted_focal,
    res_loss,
    total_loss,
    w_dice,
    w_focal,
    w_focal_node,
)

__all__ = [
    "RecLayerTerms",
    "assign_positive",
    "giou_loss",
    "rec_layer_loss",
    "rec_losses",
    "AdaptiveLosses",
    "ResLossTerms",
    "dice_loss",
    "focal_loss",
    "fuse_masks",
    "mask_weighted_dice",
    "point_weighted_focal",
    "res_loss",
    "total_loss",
    "w_dice",
    "w_focal",
    "w_focal_node",
]
