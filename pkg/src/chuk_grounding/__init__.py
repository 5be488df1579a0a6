"""
Chuk Grounding - desk-scale 3D visual grounding.

Locates the object a short referring expression describes in a point cloud,
both as a box and as a point mask, with the two branches aligned during
training.
"""

__version__ = "0.1.0"

from chuk_grounding.config import RunConfig, get_preset, list_presets
from chuk_grounding.data import SceneSample, SceneSpec, generate_dataset, load_dataset
from chuk_grounding.evaluation import EvalRecord, Report, build_report
from chuk_grounding.model import GroundingModel
from chuk_grounding.pipeline import evaluate, gradcheck_suite, train

__all__ = [
    "__version__",
    "RunConfig",
    "get_preset",
    "list_presets",
    "SceneSample",
    "SceneSpec",
    "generate_dataset",
    "load_dataset",
    "EvalRecord",
    "Report",
    "build_report",
    "GroundingModel",
    "evaluate",
    "gradcheck_suite",
    "train",
]
