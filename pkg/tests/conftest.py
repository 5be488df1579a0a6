"""Shared fixtures."""

import pytest

from chuk_grounding.config import RunConfig, get_preset
from chuk_grounding.data import SceneSample, generate_dataset, toy_sample, toy_scene_spec


@pytest.fixture
def toy_config() -> RunConfig:
    return get_preset("toy")


@pytest.fixture
def sample() -> SceneSample:
    return toy_sample()


@pytest.fixture(scope="session")
def toy_dataset() -> list[SceneSample]:
    """Eight generated 64-point samples matching the toy preset."""
    return generate_dataset(toy_scene_spec(count=8), seed=3)


TOY_SPEC = """
# 64-point scenes matching the toy preset
n_points = 64
min_objects = 2
max_objects = 3
min_object_points = 8
max_object_points = 12
min_clutter_points = 16
extent_x = 1.5
extent_y = 1.5
extent_z = 1.0
min_edge = 0.15
max_edge = 0.3
"""


@pytest.fixture
def toy_spec_file(tmp_path):
    """Scene spec file for generating toy-sized datasets."""
    path = tmp_path / "toy.spec"
    path.write_text(TOY_SPEC)
    return path
