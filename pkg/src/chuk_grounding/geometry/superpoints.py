"""
Superpoint partitioning, ball-query neighbor search and mask conversions.

Neighbor search is brute force over the full distance matrix; clouds are a
few thousand points at most.
"""

import numpy as np
import numpy.typing as npt

from chuk_grounding.errors import DimensionError, PreconditionError
from chuk_grounding.geometry.models import NeighborTable, SuperpointPartition

DEFAULT_CELL = 0.25
DEFAULT_K = 2
DEFAULT_RADIUS = 0.2


def grid_superpoints(positions: npt.ArrayLike, cell: float = DEFAULT_CELL) -> SuperpointPartition:
    """Bucket points by ``floor(position / cell)``; occupied cells become superpoints."""
    if cell <= 0.0:
        raise PreconditionError(f"grid cell must be positive, got {cell}")
    pts = np.asarray(positions, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DimensionError(f"positions must be n x 3, got shape {pts.shape}")
    if pts.shape[0] == 0:
        raise PreconditionError("cannot partition an empty cloud")
    keys = np.floor(pts / cell).astype(np.int64)
    _, cell_ids = np.unique(keys, axis=0, return_inverse=True)
    return SuperpointPartition.from_assignment(cell_ids.reshape(-1), pts)


def ball_query(
    partition: SuperpointPartition,
    positions: npt.ArrayLike,
    k: int = DEFAULT_K,
    radius: float = DEFAULT_RADIUS,
) -> NeighborTable:
    """
    Up to ``k`` points within ``radius`` of each superpoint center, nearest first.

    Distance ties order by point index. A short list is padded with the
    nearest qualifying point; a superpoint with no point inside the radius
    gets the globally nearest point ``k`` times and its fallback flag set.
    """
    if k < 1:
        raise PreconditionError(f"ball query needs K >= 1, got {k}")
    if radius <= 0.0:
        raise PreconditionError(f"ball query needs R > 0, got {radius}")
    pts = np.asarray(positions, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise PreconditionError("ball query over an empty cloud")

    centers = partition.centers
    dist = np.linalg.norm(centers[:, None, :] - pts[None, :, :], axis=2)
    point_ids = np.arange(pts.shape[0])

    indices = np.empty((centers.shape[0], k), dtype=np.int64)
    fallback = np.zeros(centers.shape[0], dtype=bool)
    for s in range(centers.shape[0]):
        order = np.lexsort((point_ids, dist[s]))
        inside = order[dist[s, order] <= radius]
        if inside.size == 0:
            indices[s] = order[0]
            fallback[s] = True
            continue
        chosen = inside[:k]
        indices[s, : chosen.size] = chosen
        indices[s, chosen.size :] = chosen[0]

    offsets = centers[:, None, :] - pts[indices]
    return NeighborTable(indices=indices, offsets=offsets, fallback=fallback, radius=radius)


def superpoint_mask_to_point_mask(
    partition: SuperpointPartition, spmask: npt.ArrayLike
) -> np.ndarray:
    """Every point inherits the bit of its superpoint."""
    bits = np.asarray(spmask, dtype=np.float64).reshape(-1)
    if bits.size != partition.count:
        raise DimensionError(
            f"superpoint mask has {bits.size} entries, partition has {partition.count}"
        )
    return (bits > 0.5).astype(np.float64)[partition.assignment]


def point_mask_to_superpoint_mask(
    partition: SuperpointPartition, point_mask: npt.ArrayLike
) -> np.ndarray:
    """Majority vote: superpoint s is set iff more than half its points are set."""
    bits = np.asarray(point_mask, dtype=np.float64).reshape(-1) > 0.5
    if bits.size != partition.assignment.size:
        raise DimensionError(
            f"point mask has {bits.size} entries, cloud has {partition.assignment.size}"
        )
    hits = np.bincount(partition.assignment, weights=bits, minlength=partition.count)
    return (2.0 * hits > partition.member_counts()).astype(np.float64)
