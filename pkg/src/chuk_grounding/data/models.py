"""
Pydantic models for synthetic scenes and referring samples.
"""

from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from chuk_grounding.data.vocabulary import COLORS, SHAPES, decode_tokens
from chuk_grounding.geometry import (
    Aabb,
    PointCloud,
    SuperpointPartition,
    point_mask_to_superpoint_mask,
)

Split = Literal["unique", "multiple"]


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


class SceneSpec(BaseModel):
    """Parameters of the synthetic scene generator."""

    seed: int = Field(default=0, ge=0, description="Base seed of the dataset")
    count: int = Field(default=500, ge=1, description="Samples to generate")
    n_points: int = Field(default=512, ge=1, description="Points per cloud, objects plus clutter")
    min_objects: int = Field(default=3, ge=1, description="Fewest objects per scene")
    max_objects: int = Field(default=6, ge=1, description="Most objects per scene")
    min_object_points: int = Field(default=30, ge=1, description="Fewest points per object")
    max_object_points: int = Field(default=60, ge=1, description="Most points per object")
    min_clutter_points: int = Field(default=64, ge=0, description="Fewest floor clutter points")
    extent_x: float = Field(default=2.5, gt=0.0, description="Scene extent along x (m)")
    extent_y: float = Field(default=2.5, gt=0.0, description="Scene extent along y (m)")
    extent_z: float = Field(default=1.0, gt=0.0, description="Scene extent along z (m)")
    min_edge: float = Field(default=0.15, gt=0.0, description="Smallest base edge of an object (m)")
    max_edge: float = Field(default=0.3, gt=0.0, description="Largest base edge of an object (m)")
    color_noise: float = Field(default=0.05, ge=0.0, description="Uniform color jitter bound")
    multiple_fraction: float = Field(
        default=0.6, ge=0.0, le=1.0, description="Share of samples with same-class distractors"
    )
    relation_margin: float = Field(
        default=0.05, ge=0.0, description="Minimum gap between referent and runner-up (m)"
    )
    cell: float = Field(default=0.25, gt=0.0, description="Superpoint grid cell (m)")
    max_attempts: int = Field(default=50, ge=1, description="Scene retries per sample")
    colors: list[str] = Field(default_factory=lambda: list(COLORS), description="Class colors")
    shapes: list[str] = Field(default_factory=lambda: list(SHAPES), description="Class shapes")

    split_class_words = field_validator("colors", "shapes", mode="before")(_split_list)

    @model_validator(mode="after")
    def _check(self) -> "SceneSpec":
        if self.min_objects > self.max_objects:
            raise ValueError("min_objects exceeds max_objects")
        if self.min_object_points > self.max_object_points:
            raise ValueError("min_object_points exceeds max_object_points")
        if self.min_edge > self.max_edge:
            raise ValueError("min_edge exceeds max_edge")
        if self.max_objects * self.max_object_points + self.min_clutter_points > self.n_points:
            raise ValueError("objects and minimum clutter do not fit in n_points")
        if self.multiple_fraction > 0.0 and self.max_objects < 2:
            raise ValueError("same-class distractors need max_objects >= 2")
        unknown = [c for c in self.colors if c not in COLORS] + [
            s for s in self.shapes if s not in SHAPES
        ]
        if unknown:
            raise ValueError(f"unknown class words: {unknown}")
        if not self.colors or not self.shapes:
            raise ValueError("at least one color and one shape required")
        longest = self.max_edge * max(max(SHAPES[s]) for s in self.shapes)
        if longest >= min(self.extent_x, self.extent_y, self.extent_z):
            raise ValueError("objects do not fit inside the scene extent")
        return self

    @property
    def extent(self) -> np.ndarray:
        return np.array([self.extent_x, self.extent_y, self.extent_z])


class SceneObject(BaseModel):
    """One colored box-shaped object."""

    model_config = ConfigDict(frozen=True)

    color: str
    shape: str
    box: Aabb

    @property
    def class_name(self) -> tuple[str, str]:
        return (self.color, self.shape)


class Scene(BaseModel):
    """Generated objects, the sampled cloud, and the owning object per point (-1: clutter)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    objects: list[SceneObject]
    cloud: PointCloud
    object_ids: np.ndarray
    focus: int = Field(..., description="An object of the class chosen for the referent")


class SceneSample(BaseModel):
    """One referring instance: cloud, superpoints, expression and ground truth."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    id: str
    cloud: PointCloud
    partition: SuperpointPartition
    tokens: list[int]
    gt_box: Aabb
    gt_point_mask: np.ndarray
    split: Split

    @field_validator("gt_point_mask", mode="before")
    @classmethod
    def _as_bits(cls, value: Any) -> np.ndarray:
        return (np.asarray(value, dtype=np.float64).reshape(-1) > 0.5).astype(np.float64)

    @model_validator(mode="after")
    def _check(self) -> "SceneSample":
        n = self.cloud.size
        if self.gt_point_mask.size != n:
            raise ValueError(f"gt_point_mask has {self.gt_point_mask.size} entries for {n} points")
        if self.partition.assignment.size != n:
            raise ValueError("superpoint assignment does not cover the cloud")
        if not self.tokens:
            raise ValueError("expression must not be empty")
        decode_tokens(self.tokens)
        inside = self.gt_box.contains(self.cloud.positions[self.gt_point_mask > 0.5])
        if not np.all(inside):
            raise ValueError("gt_point_mask selects points outside gt_box")
        return self

    @property
    def token_names(self) -> list[str]:
        return decode_tokens(self.tokens)

    @property
    def gt_superpoint_mask(self) -> np.ndarray:
        return point_mask_to_superpoint_mask(self.partition, self.gt_point_mask)
