"""
Axis-aligned box overlap measures and box/mask conversions.
"""

import numpy as np
import numpy.typing as npt

from chuk_grounding.errors import DimensionError
from chuk_grounding.geometry.models import Aabb, SuperpointPartition


def _overlap_volume(a: Aabb, b: Aabb) -> float:
    extent = np.minimum(a.high, b.high) - np.maximum(a.low, b.low)
    return float(np.prod(np.clip(extent, 0.0, None)))


def _enclosing_volume(a: Aabb, b: Aabb) -> float:
    return float(np.prod(np.maximum(a.high, b.high) - np.minimum(a.low, b.low)))


def box_iou_3d(a: Aabb, b: Aabb) -> float:
    """Intersection volume over union volume, in [0, 1]."""
    inter = _overlap_volume(a, b)
    union = a.volume + b.volume - inter
    return inter / union


def giou_3d(a: Aabb, b: Aabb) -> float:
    """
    Generalized IoU: ``IoU - (V_enclosing - V_union) / V_enclosing``.

    Lies in (-1, 1]; never exceeds ``box_iou_3d``.
    """
    inter = _overlap_volume(a, b)
    union = a.volume + b.volume - inter
    enclosing = _enclosing_volume(a, b)
    return inter / union - (enclosing - union) / enclosing


def box_iou_many(boxes: npt.ArrayLike, gt: Aabb) -> np.ndarray:
    """IoU of each ``(cx, cy, cz, w, h, d)`` row against one box."""
    arr = np.atleast_2d(np.asarray(boxes, dtype=np.float64))
    if arr.shape[1] != 6:
        raise DimensionError(f"boxes must have 6 columns, got {arr.shape[1]}")
    low = arr[:, :3] - arr[:, 3:] / 2.0
    high = arr[:, :3] + arr[:, 3:] / 2.0
    extent = np.minimum(high, gt.high) - np.maximum(low, gt.low)
    inter = np.prod(np.clip(extent, 0.0, None), axis=1)
    union = np.prod(arr[:, 3:], axis=1) + gt.volume - inter
    return inter / union


def box_to_superpoint_mask(box: Aabb, partition: SuperpointPartition) -> np.ndarray:
    """Binary superpoint mask: bit s set iff center s lies inside the closed box."""
    return box.contains(partition.centers).astype(np.float64)


def mask_iou(pred: npt.ArrayLike, gt: npt.ArrayLike) -> float:
    """
    IoU of two binary masks of equal length.

    Both empty counts as a perfect match (1.0); exactly one empty gives 0.0.
    """
    p = np.asarray(pred).reshape(-1) > 0.5
    g = np.asarray(gt).reshape(-1) > 0.5
    if p.shape != g.shape:
        raise DimensionError(f"mask lengths differ: {p.size} vs {g.size}")
    union = int(np.count_nonzero(p | g))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(p & g)) / union
