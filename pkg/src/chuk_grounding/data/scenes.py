"""
Synthetic referring scenes.

Objects are axis-aligned boxes resting on the floor, filled with
class-colored points; the remaining point budget is floor clutter. A
symbolic resolver interprets expressions and is the oracle that every
emitted expression identifies exactly its target.
"""

import logging
from collections.abc import Sequence

import numpy as np

from chuk_grounding.data.models import Scene, SceneObject, SceneSample, SceneSpec, Split
from chuk_grounding.data.vocabulary import (
    ANY_SHAPE,
    COLORS,
    FLOOR_COLOR,
    RELATIONS,
    SHAPES,
    encode_tokens,
    hex_to_rgb,
)
from chuk_grounding.errors import ExpressionError, PreconditionError
from chuk_grounding.geometry import Aabb, PointCloud, grid_superpoints

logger = logging.getLogger(__name__)

FLOOR_THICKNESS = 0.05
PLACEMENT_TRIES = 200
OBJECT_GAP = 0.05
VOLUME_MARGIN = 0.15


def _rng(seed: int | np.random.Generator) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# ============================================================================
# SCENES
# ============================================================================


def _place_box(
    spec: SceneSpec, shape: str, placed: list[Aabb], rng: np.random.Generator
) -> Aabb:
    edge = rng.uniform(spec.min_edge, spec.max_edge)
    size = edge * np.asarray(SHAPES[shape])
    for _ in range(PLACEMENT_TRIES):
        xy = rng.uniform(size[:2] / 2.0, spec.extent[:2] - size[:2] / 2.0)
        center = (float(xy[0]), float(xy[1]), float(size[2] / 2.0))
        box = Aabb(center=center, size=tuple(size))  # type: ignore[arg-type]
        if all(
            np.any(box.low > other.high + OBJECT_GAP) or np.any(other.low > box.high + OBJECT_GAP)
            for other in placed
        ):
            return box
    raise PreconditionError(
        f"could not place a {shape} after {PLACEMENT_TRIES} tries; scene extent too crowded"
    )


def _jitter(
    rgb: tuple[float, float, float], count: int, noise: float, rng: np.random.Generator
) -> np.ndarray:
    base = np.tile(np.asarray(rgb), (count, 1))
    return np.clip(base + rng.uniform(-noise, noise, size=base.shape), 0.0, 1.0)


def generate_scene(
    spec: SceneSpec, seed: int | np.random.Generator, multiple: bool | None = None
) -> Scene:
    """
    Sample objects and a cloud of exactly ``spec.n_points`` points.

    One class is chosen for the referent; with ``multiple`` it appears two or
    three times, otherwise once. Deterministic per seed.
    """
    rng = _rng(seed)
    if multiple is None:
        multiple = bool(rng.random() < spec.multiple_fraction)
    count = int(rng.integers(max(spec.min_objects, 2 if multiple else 1), spec.max_objects + 1))
    focus_class = (str(rng.choice(spec.colors)), str(rng.choice(spec.shapes)))
    same = int(rng.integers(2, min(3, count) + 1)) if multiple else 1

    others = [(c, s) for c in spec.colors for s in spec.shapes if (c, s) != focus_class]
    if not others and count > same:
        count = same
    classes = [focus_class] * same
    for _ in range(count - same):
        classes.append(others[int(rng.integers(len(others)))])

    objects: list[SceneObject] = []
    for color, shape in classes:
        box = _place_box(spec, shape, [obj.box for obj in objects], rng)
        objects.append(SceneObject(color=color, shape=shape, box=box))

    positions: list[np.ndarray] = []
    colors: list[np.ndarray] = []
    owners: list[np.ndarray] = []
    for index, obj in enumerate(objects):
        n_obj = int(rng.integers(spec.min_object_points, spec.max_object_points + 1))
        unit = 0.001 + 0.998 * rng.random((n_obj, 3))
        positions.append(obj.box.low + unit * np.asarray(obj.box.size))
        colors.append(_jitter(hex_to_rgb(COLORS[obj.color]), n_obj, spec.color_noise, rng))
        owners.append(np.full(n_obj, index, dtype=np.int64))

    n_clutter = spec.n_points - sum(len(block) for block in owners)
    clutter = np.empty((0, 3))
    while clutter.shape[0] < n_clutter:
        draw = rng.uniform(
            [0.0, 0.0, 0.0], [spec.extent_x, spec.extent_y, FLOOR_THICKNESS], size=(n_clutter, 3)
        )
        keep = np.ones(n_clutter, dtype=bool)
        for obj in objects:
            keep &= ~obj.box.contains(draw)
        clutter = np.concatenate([clutter, draw[keep]])[:n_clutter]
    positions.append(clutter)
    colors.append(_jitter(hex_to_rgb(FLOOR_COLOR), n_clutter, spec.color_noise, rng))
    owners.append(np.full(n_clutter, -1, dtype=np.int64))

    order = rng.permutation(spec.n_points)
    cloud = PointCloud(
        positions=np.concatenate(positions)[order], colors=np.concatenate(colors)[order]
    )
    return Scene(objects=objects, cloud=cloud, object_ids=np.concatenate(owners)[order], focus=0)


# ============================================================================
# EXPRESSIONS
# ============================================================================


def _relation_keys(
    objects: Sequence[SceneObject], candidates: list[int], relation: str, anchor: int | None
) -> np.ndarray:
    centers = np.array([objects[i].box.center for i in candidates])
    volumes = np.array([objects[i].box.volume for i in candidates])
    heights = np.array([objects[i].box.size[2] for i in candidates])
    if relation == "leftmost":
        return centers[:, 0]
    if relation == "rightmost":
        return -centers[:, 0]
    if relation == "frontmost":
        return centers[:, 1]
    if relation == "backmost":
        return -centers[:, 1]
    if relation == "shortest":
        return heights
    if relation == "tallest":
        return -heights
    if relation == "smallest":
        return volumes
    if relation == "largest":
        return -volumes
    if relation == "nearest" and anchor is not None:
        return np.linalg.norm(centers - np.asarray(objects[anchor].box.center), axis=1)
    raise ExpressionError(f"unknown relation '{relation}'")


def _match_class(objects: Sequence[SceneObject], color: str, shape: str) -> list[int]:
    if color not in COLORS or (shape not in SHAPES and shape != ANY_SHAPE):
        raise ExpressionError(f"'{color} {shape}' is not an object class")
    return [
        i
        for i, obj in enumerate(objects)
        if obj.color == color and (shape == ANY_SHAPE or obj.shape == shape)
    ]


def resolve_expression(objects: Sequence[SceneObject], names: Sequence[str]) -> list[int]:
    """
    Indices of the objects an expression refers to.

    Grammar: ``color shape [relation [anchor-color anchor-shape]]``; the
    shape may be ``object``. ``nearest`` needs an anchor that resolves to one
    object. Ties on the relation return every tied candidate.
    """
    if len(names) < 2:
        raise ExpressionError(f"expression too short: {list(names)}")
    candidates = _match_class(objects, names[0], names[1])
    if len(names) == 2 or not candidates:
        return candidates

    relation = names[2]
    anchor: int | None = None
    if relation == "nearest":
        if len(names) != 5:
            raise ExpressionError("'nearest' needs an anchor color and shape")
        anchors = _match_class(objects, names[3], names[4])
        if len(anchors) != 1:
            return []
        anchor = anchors[0]
        candidates = [i for i in candidates if i != anchor]
        if not candidates:
            return []
    elif len(names) != 3:
        raise ExpressionError(f"unexpected tokens after '{relation}'")

    keys = _relation_keys(objects, candidates, relation, anchor)
    best = keys.min()
    return [i for i, key in zip(candidates, keys) if key == best]


def _margin_ok(keys: np.ndarray, relation: str, margin: float) -> bool:
    if keys.size < 2:
        return True
    ordered = np.sort(keys)
    gap = ordered[1] - ordered[0]
    if relation in ("smallest", "largest"):
        return bool(gap >= VOLUME_MARGIN * abs(ordered[0]))
    return bool(gap >= margin)


def generate_expression(
    scene: Scene, target: int, rng: np.random.Generator, margin: float = 0.05
) -> tuple[list[str], Split]:
    """
    ``[color, shape]`` for a unique class, otherwise a relation that singles out the target.

    Raises:
        ExpressionError: If no relation identifies the target with the margin
    """
    objects = scene.objects
    if not 0 <= target < len(objects):
        raise PreconditionError(f"target {target} not in scene of {len(objects)} objects")
    obj = objects[target]
    same = _match_class(objects, obj.color, obj.shape)
    if len(same) == 1:
        return [obj.color, obj.shape], "unique"

    class_counts: dict[tuple[str, str], int] = {}
    for other in objects:
        class_counts[other.class_name] = class_counts.get(other.class_name, 0) + 1

    for relation in rng.permutation(len(RELATIONS)):
        name = RELATIONS[int(relation)]
        if name == "nearest":
            anchors = [
                i
                for i, other in enumerate(objects)
                if class_counts[other.class_name] == 1 and i != target
            ]
            for a in rng.permutation(len(anchors)):
                anchor = anchors[int(a)]
                anchor_obj = objects[anchor]
                names = [obj.color, obj.shape, "nearest", anchor_obj.color, anchor_obj.shape]
                keys = _relation_keys(objects, same, "nearest", anchor)
                resolved = resolve_expression(objects, names)
                if resolved == [target] and _margin_ok(keys, name, margin):
                    return names, "multiple"
            continue
        names = [obj.color, obj.shape, name]
        keys = _relation_keys(objects, same, name, None)
        if resolve_expression(objects, names) == [target] and _margin_ok(keys, name, margin):
            return names, "multiple"

    raise ExpressionError(
        f"no relation singles out object {target} ({obj.color} {obj.shape}) among {len(same)}"
    )


# ============================================================================
# SAMPLES
# ============================================================================


def generate_sample(
    spec: SceneSpec, seed: int | np.random.Generator, sample_id: str
) -> SceneSample:
    """
    One sample whose expression resolves to exactly its target.

    Scenes without an identifying expression are rejected and redrawn.
    """
    rng = _rng(seed)
    for attempt in range(spec.max_attempts):
        scene = generate_scene(spec, rng)
        focus_class = scene.objects[scene.focus].class_name
        same = [i for i, obj in enumerate(scene.objects) if obj.class_name == focus_class]
        target = same[int(rng.integers(len(same)))]
        try:
            names, split = generate_expression(scene, target, rng, margin=spec.relation_margin)
        except ExpressionError as exc:
            logger.debug("sample %s attempt %d rejected: %s", sample_id, attempt, exc)
            continue
        box = scene.objects[target].box
        return SceneSample(
            id=sample_id,
            cloud=scene.cloud,
            partition=grid_superpoints(scene.cloud.positions, spec.cell),
            tokens=encode_tokens(names),
            gt_box=box,
            gt_point_mask=(scene.object_ids == target).astype(np.float64),
            split=split,
        )
    raise ExpressionError(
        f"sample {sample_id}: no identifiable target in {spec.max_attempts} scenes"
    )


def generate_dataset(
    spec: SceneSpec, seed: int | None = None, count: int | None = None, prefix: str = "s"
) -> list[SceneSample]:
    """
    ``count`` samples, each from its own child of ``SeedSequence(seed)``.

    Sample i depends only on (seed, i), so generation can be split across
    workers without changing the output.
    """
    base = spec.seed if seed is None else seed
    total = spec.count if count is None else count
    children = np.random.SeedSequence(base).spawn(total)
    samples = [
        generate_sample(spec, np.random.default_rng(child), f"{prefix}{base}-{i:05d}")
        for i, child in enumerate(children)
    ]
    multiple = sum(sample.split == "multiple" for sample in samples)
    logger.info("generated %d samples (%d multiple) from seed %d", total, multiple, base)
    return samples
