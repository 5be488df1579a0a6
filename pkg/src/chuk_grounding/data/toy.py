"""
Hand-built miniature samples and a toy scene spec for checks and smoke runs.
"""

import numpy as np

from chuk_grounding.data.models import SceneSample, SceneSpec
from chuk_grounding.data.vocabulary import encode_tokens
from chuk_grounding.geometry import Aabb, PointCloud, grid_superpoints


def toy_sample(sample_id: str = "toy-0") -> SceneSample:
    """
    Four points in two superpoints; the referent is the pair near the origin.

    Expression ``red cube leftmost``; both superpoints lie within the default
    ball-query radius of their own members.
    """
    positions = np.array(
        [
            [0.10, 0.10, 0.05],
            [0.15, 0.12, 0.10],
            [0.90, 0.90, 0.05],
            [0.95, 0.85, 0.10],
        ]
    )
    colors = np.array(
        [
            [0.93, 0.27, 0.27],
            [0.90, 0.25, 0.30],
            [0.40, 0.45, 0.55],
            [0.35, 0.47, 0.50],
        ]
    )
    return SceneSample(
        id=sample_id,
        cloud=PointCloud(positions=positions, colors=colors),
        partition=grid_superpoints(positions, 0.25),
        tokens=encode_tokens(["red", "cube", "leftmost"]),
        gt_box=Aabb(center=(0.125, 0.11, 0.075), size=(0.1, 0.08, 0.1)),
        gt_point_mask=np.array([1.0, 1.0, 0.0, 0.0]),
        split="multiple",
    )


def toy_scene_spec(count: int = 16, seed: int = 0) -> SceneSpec:
    """Small scenes matching the ``toy`` preset's 64-point clouds."""
    return SceneSpec(
        seed=seed,
        count=count,
        n_points=64,
        min_objects=2,
        max_objects=3,
        min_object_points=8,
        max_object_points=12,
        min_clutter_points=16,
        extent_x=1.5,
        extent_y=1.5,
        extent_z=1.0,
        min_edge=0.15,
        max_edge=0.3,
    )
