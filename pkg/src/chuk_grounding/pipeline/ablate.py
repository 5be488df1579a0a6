"""
Paired ablation runs.

Each axis names an "on" and an "off" flag setting. Both settings are trained
and evaluated with the same seeds, and the report carries every run plus the
on-minus-off difference of the mean of each metric.
"""

import logging
from collections.abc import Sequence
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from chuk_grounding.config import RunConfig
from chuk_grounding.data import SceneSample
from chuk_grounding.evaluation import SplitMetrics
from chuk_grounding.pipeline.checkpoint import restore_model
from chuk_grounding.pipeline.evaluate import evaluate_model
from chuk_grounding.pipeline.train import VAL_KEYS, train

logger = logging.getLogger(__name__)

Setting = Literal["on", "off"]

MIN_SEEDS = 3

AXES: dict[str, tuple[dict[str, str], dict[str, str]]] = {
    "asa": ({"asa": "on"}, {"asa": "off"}),
    "rsa": ({"rsa": "on"}, {"rsa": "off"}),
    "align_target": ({"align_target": "mask"}, {"align_target": "box"}),
    "fusion": ({"fusion": "plus"}, {"fusion": "mul"}),
    "adaptive_losses": ({"adaptive_losses": "on"}, {"adaptive_losses": "off"}),
}

HEADLINE_METRIC = {"asa": "die3"}


def list_axes() -> list[str]:
    return list(AXES.keys())


def get_axis(name: str) -> tuple[dict[str, str], dict[str, str]]:
    """
    Flag settings (on, off) of an ablation axis.

    Raises:
        ValueError: If the axis is unknown
    """
    key = name.lower().replace("-", "_")
    if key not in AXES:
        available = ", ".join(list_axes())
        raise ValueError(f"Ablation axis '{name}' not found. Available axes: {available}")
    return AXES[key]


class AblationRun(BaseModel):
    setting: Setting
    flags: dict[str, str]
    seed: int
    final_loss: float
    metrics: SplitMetrics


class AblationReport(BaseModel):
    axis: str
    on_flags: dict[str, str]
    off_flags: dict[str, str]
    seeds: list[int]
    runs: list[AblationRun] = Field(default_factory=list)
    deltas: dict[str, float] = Field(default_factory=dict)
    headline: str = "miou"

    @property
    def headline_delta(self) -> float:
        return self.deltas[self.headline]


def _run(
    config: RunConfig,
    setting: Setting,
    flags: dict[str, str],
    seed: int,
    train_samples: Sequence[SceneSample],
    val_samples: Sequence[SceneSample],
) -> AblationRun:
    run_config = config.with_flags(**flags).with_seed(seed)
    result = train(run_config, train_samples)
    report, _ = evaluate_model(restore_model(result.checkpoint), val_samples)
    final_loss = result.log[-1].loss_total if result.log else float("nan")
    logger.info("%s seed=%d: %s", flags, seed, report.model_dump(include=set(VAL_KEYS)))
    return AblationRun(
        setting=setting,
        flags=flags,
        seed=seed,
        final_loss=final_loss,
        metrics=SplitMetrics.model_validate(report.model_dump(exclude={"unique", "multiple"})),
    )


def _mean(runs: Sequence[AblationRun], key: str) -> float:
    values = [getattr(run.metrics, key) for run in runs]
    return float(np.mean([v for v in values if v is not None]))


def ablate(
    config: RunConfig,
    axis: str,
    seeds: Sequence[int],
    train_samples: Sequence[SceneSample],
    val_samples: Sequence[SceneSample],
) -> AblationReport:
    """
    Train and evaluate both settings of ``axis`` for every seed.

    Raises:
        ValueError: If the axis is unknown or no seed is given
    """
    on_flags, off_flags = get_axis(axis)
    if not seeds:
        raise ValueError("ablation needs at least one seed")
    if len(seeds) < MIN_SEEDS:
        logger.warning(
            "ablation over %d seed(s); at least %d are needed for a trend", len(seeds), MIN_SEEDS
        )

    runs = []
    for seed in seeds:
        runs.append(_run(config, "on", on_flags, seed, train_samples, val_samples))
        runs.append(_run(config, "off", off_flags, seed, train_samples, val_samples))

    on_runs = [run for run in runs if run.setting == "on"]
    off_runs = [run for run in runs if run.setting == "off"]
    deltas = {key: _mean(on_runs, key) - _mean(off_runs, key) for key in VAL_KEYS}
    key = axis.lower().replace("-", "_")
    report = AblationReport(
        axis=key,
        on_flags=on_flags,
        off_flags=off_flags,
        seeds=list(seeds),
        runs=runs,
        deltas=deltas,
        headline=HEADLINE_METRIC.get(key, "miou"),
    )
    logger.info("ablation %s: %s delta %+.4f", key, report.headline, report.headline_delta)
    return report
