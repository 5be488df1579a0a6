"""
JSON Lines dataset files.

One sample per line, UTF-8. Floats are written with ``repr`` precision so a
save/load round trip is exact. Files are written to a temporary sibling and
renamed into place.
"""

import json
import logging
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from chuk_grounding.data.models import SceneSample
from chuk_grounding.data.vocabulary import decode_tokens
from chuk_grounding.errors import DatasetFormatError, GroundingError, UnsupportedVersionError
from chuk_grounding.geometry import (
    Aabb,
    PointCloud,
    SuperpointPartition,
    mask_iou,
    superpoint_mask_to_point_mask,
)

logger = logging.getLogger(__name__)

DATASET_VERSION = 1

REQUIRED_KEYS = (
    "version",
    "id",
    "points",
    "superpoint",
    "tokens",
    "gt_box",
    "gt_point_mask",
    "split",
)


def sample_to_record(sample: SceneSample) -> dict[str, Any]:
    points = np.concatenate([sample.cloud.positions, sample.cloud.colors], axis=1)
    return {
        "version": DATASET_VERSION,
        "id": sample.id,
        "points": points.tolist(),
        "superpoint": sample.partition.assignment.tolist(),
        "tokens": list(sample.tokens),
        "token_names": sample.token_names,
        "gt_box": sample.gt_box.to_array().tolist(),
        "gt_point_mask": [int(bit) for bit in sample.gt_point_mask],
        "split": sample.split,
    }


def record_to_sample(record: dict[str, Any], line: int = 0) -> SceneSample:
    """
    Rebuild a sample from a parsed record.

    Raises:
        UnsupportedVersionError: If the record declares another format version
        DatasetFormatError: If keys are missing or values are malformed
    """
    if not isinstance(record, dict):
        raise DatasetFormatError(line, "record is not a JSON object")
    missing = [key for key in REQUIRED_KEYS if key not in record]
    if missing:
        raise DatasetFormatError(line, f"missing keys {missing}")
    if record["version"] != DATASET_VERSION:
        raise UnsupportedVersionError(
            f"line {line}: dataset version {record['version']!r} is not supported "
            f"(this build reads version {DATASET_VERSION})"
        )
    try:
        points = np.asarray(record["points"], dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 6:
            raise DatasetFormatError(line, f"points must be n x 6, got shape {points.shape}")
        cloud = PointCloud(positions=points[:, :3], colors=points[:, 3:])
        partition = SuperpointPartition.from_assignment(record["superpoint"], cloud.positions)
        if "token_names" in record and record["token_names"] != decode_tokens(record["tokens"]):
            raise DatasetFormatError(line, "token_names disagree with tokens")
        return SceneSample(
            id=str(record["id"]),
            cloud=cloud,
            partition=partition,
            tokens=[int(token) for token in record["tokens"]],
            gt_box=Aabb.from_array(record["gt_box"]),
            gt_point_mask=record["gt_point_mask"],
            split=record["split"],
        )
    except DatasetFormatError:
        raise
    except (ValidationError, GroundingError, TypeError, ValueError) as exc:
        raise DatasetFormatError(line, str(exc).splitlines()[0]) from exc


def save_dataset(samples: Iterable[SceneSample], path: str | Path) -> int:
    """Write samples atomically; returns the number written."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    count = 0
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            for sample in samples:
                handle.write(json.dumps(sample_to_record(sample)) + "\n")
                count += 1
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.info("wrote %d samples to %s", count, target)
    return count


def load_dataset(path: str | Path) -> list[SceneSample]:
    """
    Read every sample of a JSONL file.

    Raises:
        DatasetFormatError: On the first unparsable line, naming it
        UnsupportedVersionError: On a record with another format version
    """
    samples: list[SceneSample] = []
    with Path(path).open(encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(number, f"invalid JSON ({exc.msg})") from exc
            samples.append(record_to_sample(record, number))
    logger.info("loaded %d samples from %s", len(samples), path)
    return samples


def superpoint_gt_quality(samples: Sequence[SceneSample]) -> float:
    """Mean IoU of majority-vote superpoint ground truth (expanded to points) vs point truth."""
    if not samples:
        return 0.0
    scores = [
        mask_iou(
            superpoint_mask_to_point_mask(sample.partition, sample.gt_superpoint_mask),
            sample.gt_point_mask,
        )
        for sample in samples
    ]
    return float(np.mean(scores))


def split_counts(samples: Sequence[SceneSample]) -> dict[str, int]:
    counts = {"unique": 0, "multiple": 0}
    for sample in samples:
        counts[sample.split] += 1
    return counts
