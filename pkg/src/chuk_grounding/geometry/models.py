"""
Pydantic models for point clouds, superpoint partitions and boxes.

Array-valued fields are numpy arrays (``arbitrary_types_allowed``); models
are frozen after validation.
"""

from typing import Any

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from chuk_grounding.errors import DimensionError, PreconditionError

Vec3 = tuple[float, float, float]


# ============================================================================
# POINT CLOUD
# ============================================================================


class PointCloud(BaseModel):
    """n points with xyz positions (meters) and rgb colors in [0, 1]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    positions: np.ndarray
    colors: np.ndarray

    @field_validator("positions", "colors", mode="before")
    @classmethod
    def _as_float_array(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected an n x 3 array, got shape {arr.shape}")
        return arr

    @model_validator(mode="after")
    def _check(self) -> "PointCloud":
        if self.positions.shape[0] < 1:
            raise ValueError("a point cloud needs at least one point")
        if self.positions.shape != self.colors.shape:
            raise ValueError("positions and colors must have the same shape")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("point coordinates must be finite")
        if np.any(self.colors < 0.0) or np.any(self.colors > 1.0):
            raise ValueError("colors must lie in [0, 1]")
        return self

    @property
    def size(self) -> int:
        return int(self.positions.shape[0])

    def features(self) -> np.ndarray:
        """``n x 6`` xyz + rgb rows, the input to the point encoder."""
        return np.concatenate([self.positions, self.colors], axis=1)


# ============================================================================
# SUPERPOINTS
# ============================================================================


class SuperpointPartition(BaseModel):
    """Assignment of every point to one of m non-empty superpoints."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    assignment: np.ndarray = Field(..., description="Per-point superpoint id in [0, m)")
    centers: np.ndarray = Field(..., description="m x 3 superpoint centroids")
    members: list[np.ndarray] = Field(..., description="Point indices per superpoint")

    @model_validator(mode="after")
    def _check(self) -> "SuperpointPartition":
        m = self.centers.shape[0]
        if len(self.members) != m:
            raise ValueError("one member list per superpoint required")
        if any(len(group) == 0 for group in self.members):
            raise ValueError("every superpoint must be non-empty")
        if self.assignment.size and (self.assignment.min() < 0 or self.assignment.max() >= m):
            raise ValueError("superpoint ids must lie in [0, m)")
        if sum(len(group) for group in self.members) != self.assignment.size:
            raise ValueError("every point must be assigned exactly once")
        return self

    @classmethod
    def from_assignment(
        cls, assignment: npt.ArrayLike, positions: np.ndarray
    ) -> "SuperpointPartition":
        """Densify ids (order of first appearance of sorted ids) and compute member means."""
        raw = np.asarray(assignment, dtype=np.int64).reshape(-1)
        if raw.size != positions.shape[0]:
            raise DimensionError(
                f"{raw.size} superpoint ids for {positions.shape[0]} points"
            )
        if raw.size == 0:
            raise PreconditionError("cannot partition an empty cloud")
        _, dense = np.unique(raw, return_inverse=True)
        dense = dense.astype(np.int64).reshape(-1)
        m = int(dense.max()) + 1
        members = [np.flatnonzero(dense == s) for s in range(m)]
        centers = np.stack([positions[group].mean(axis=0) for group in members])
        return cls(assignment=dense, centers=centers, members=members)

    @property
    def count(self) -> int:
        return int(self.centers.shape[0])

    def member_counts(self) -> np.ndarray:
        return np.array([len(group) for group in self.members], dtype=np.int64)


class SuperpointMask(BaseModel):
    """Real logits over m superpoints with a thresholded binary view."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    logits: np.ndarray
    tau: float = Field(default=0.5, gt=0.0, lt=1.0)

    @field_validator("logits", mode="before")
    @classmethod
    def _flatten(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=np.float64).reshape(-1)

    @classmethod
    def from_probabilities(cls, probs: npt.ArrayLike, tau: float = 0.5) -> "SuperpointMask":
        p = np.clip(np.asarray(probs, dtype=np.float64).reshape(-1), 1e-12, 1.0 - 1e-12)
        return cls(logits=np.log(p) - np.log1p(-p), tau=tau)

    @property
    def size(self) -> int:
        return int(self.logits.size)

    def probabilities(self) -> np.ndarray:
        return np.exp(-np.logaddexp(0.0, -self.logits))

    def binary(self) -> np.ndarray:
        return (self.probabilities() >= self.tau).astype(np.float64)

    def check_partition(self, partition: "SuperpointPartition") -> None:
        if self.size != partition.count:
            raise DimensionError(
                f"mask has {self.size} entries, partition has {partition.count} superpoints"
            )


class NeighborTable(BaseModel):
    """Ball-query result: K point indices and offsets per superpoint."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    indices: np.ndarray = Field(..., description="m x K point indices, nearest first")
    offsets: np.ndarray = Field(..., description="m x K x 3 offsets center - point")
    fallback: np.ndarray = Field(..., description="m flags: no point within the radius")
    radius: float

    @property
    def k(self) -> int:
        return int(self.indices.shape[1])


# ============================================================================
# BOXES
# ============================================================================


class Aabb(BaseModel):
    """Axis-aligned box as center + size (meters)."""

    model_config = ConfigDict(frozen=True)

    center: Vec3
    size: Vec3

    @field_validator("size")
    @classmethod
    def _positive(cls, value: Vec3) -> Vec3:
        if any(not np.isfinite(v) or v <= 0.0 for v in value):
            raise ValueError(f"box size must be positive, got {value}")
        return value

    @field_validator("center")
    @classmethod
    def _finite(cls, value: Vec3) -> Vec3:
        if any(not np.isfinite(v) for v in value):
            raise ValueError(f"box center must be finite, got {value}")
        return value

    @classmethod
    def from_array(cls, values: npt.ArrayLike) -> "Aabb":
        """From ``(cx, cy, cz, w, h, d)``."""
        arr = np.asarray(values, dtype=np.float64).reshape(-1)
        if arr.size != 6:
            raise DimensionError(f"a box needs 6 numbers, got {arr.size}")
        center, size = tuple(arr[:3].tolist()), tuple(arr[3:].tolist())
        return cls(center=center, size=size)  # type: ignore[arg-type]

    @classmethod
    def from_corners(cls, low: npt.ArrayLike, high: npt.ArrayLike) -> "Aabb":
        lo = np.asarray(low, dtype=np.float64)
        hi = np.asarray(high, dtype=np.float64)
        center, size = tuple(((lo + hi) / 2).tolist()), tuple((hi - lo).tolist())
        return cls(center=center, size=size)  # type: ignore[arg-type]

    def to_array(self) -> np.ndarray:
        return np.array([*self.center, *self.size], dtype=np.float64)

    @property
    def low(self) -> np.ndarray:
        return np.asarray(self.center) - np.asarray(self.size) / 2.0

    @property
    def high(self) -> np.ndarray:
        return np.asarray(self.center) + np.asarray(self.size) / 2.0

    @property
    def volume(self) -> float:
        return float(np.prod(self.size))

    def contains(self, points: npt.ArrayLike) -> np.ndarray:
        """Closed containment test for an ``n x 3`` array (boundary counts in)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.all((pts >= self.low) & (pts <= self.high), axis=1)
