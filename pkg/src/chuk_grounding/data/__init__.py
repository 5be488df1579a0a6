"""
Data package - vocabulary, synthetic scene generation and dataset files.
"""

from chuk_grounding.data.vocabulary import (
    ANY_SHAPE,
    COLORS,
    RELATIONS,
    SHAPES,
    TOKEN_IDS,
    TOKENS,
    VOCAB_SIZE,
    anonymize_expression,
    decode_tokens,
    encode_tokens,
    hex_to_rgb,
)
from chuk_grounding.data.models import Scene, SceneObject, SceneSample, SceneSpec, Split
from chuk_grounding.data.scenes import (
    generate_dataset,
    generate_expression,
    generate_sample,
    generate_scene,
    resolve_expression,
)
from chuk_grounding.data.dataset import (
    DATASET_VERSION,
    load_dataset,
    record_to_sample,
    sample_to_record,
    save_dataset,
    split_counts,
    superpoint_gt_quality,
)
from chuk_grounding.data.toy import toy_sample, toy_scene_spec

__all__ = [
    "ANY_SHAPE",
    "COLORS",
    "RELATIONS",
    "SHAPES",
    "TOKEN_IDS",
    "TOKENS",
    "VOCAB_SIZE",
    "anonymize_expression",
    "decode_tokens",
    "encode_tokens",
    "hex_to_rgb",
    "Scene",
    "SceneObject",
    "SceneSample",
    "SceneSpec",
    "Split",
    "generate_dataset",
    "generate_expression",
    "generate_sample",
    "generate_scene",
    "resolve_expression",
    "DATASET_VERSION",
    "load_dataset",
    "record_to_sample",
    "sample_to_record",
    "save_dataset",
    "split_counts",
    "superpoint_gt_quality",
    "toy_sample",
    "toy_scene_spec",
]
