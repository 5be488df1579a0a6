"""
Geometry package - clouds, superpoints, boxes and masks.
"""

from chuk_grounding.geometry.models import (
    Aabb,
    NeighborTable,
    PointCloud,
    SuperpointMask,
    SuperpointPartition,
)
from chuk_grounding.geometry.boxes import (
    box_iou_3d,
    box_iou_many,
    box_to_superpoint_mask,
    giou_3d,
    mask_iou,
)
from chuk_grounding.geometry.superpoints import (
    DEFAULT_CELL,
    DEFAULT_K,
    DEFAULT_RADIUS,
    ball_query,
    grid_superpoints,
    point_mask_to_superpoint_mask,
    superpoint_mask_to_point_mask,
)

__all__ = [
    "Aabb",
    "NeighborTable",
    "PointCloud",
    "SuperpointMask",
    "SuperpointPartition",
    "box_iou_3d",
    "box_iou_many",
    "box_to_superpoint_mask",
    "giou_3d",
    "mask_iou",
    "DEFAULT_CELL",
    "DEFAULT_K",
    "DEFAULT_RADIUS",
    "ball_query",
    "grid_superpoints",
    "point_mask_to_superpoint_mask",
    "superpoint_mask_to_point_mask",
]
