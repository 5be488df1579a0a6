"""
Finite-difference checks of every differentiable op, every model component
and the full training loss of one small sample.

Each check reduces its output to a scalar through a fixed, non-uniform
weighting so that every output entry contributes a distinct amount.
"""

import logging
import time
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, Field

from chuk_grounding.config import RunConfig, get_preset
from chuk_grounding.data import SceneSample, toy_sample
from chuk_grounding.geometry import Aabb
from chuk_grounding.losses import (
    dice_loss,
    focal_loss,
    fuse_masks,
    giou_loss,
    point_weighted_focal,
    w_focal_node,
)
from chuk_grounding.model import (
    GroundingModel,
    cross_modal_encode,
    decode_masks,
    encode_points,
    encode_text,
    predict_layer,
    predict_mask,
    rec_decode,
    rsa_forward,
    select_highest_token,
)
from chuk_grounding.numeric import (
    MASKED,
    GradCheckReport,
    Node,
    Param,
    Tape,
    grad_check,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-4
LOSS_MAX_ENTRIES = 6

LossFn = Callable[[Tape], Node]


class SuiteReport(BaseModel):
    """Results of every check; the suite passes only if all of them do."""

    checks: list[GradCheckReport] = Field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> list[GradCheckReport]:
        return [check for check in self.checks if not check.passed]


def readout(tape: Tape, node: Node) -> Node:
    """``sum(node * W)`` for a fixed weighting ``W`` of the node's shape."""
    weights = np.sin(np.arange(1, node.value.size + 1, dtype=np.float64)).reshape(node.shape)
    return tape.sum(tape.mul(node, tape.constant(weights)))


def _param(rng: np.random.Generator, name: str, rows: int, cols: int, low: float = -1.0) -> Param:
    return Param(name, rng.uniform(low, 1.0, size=(rows, cols)))


# ============================================================================
# OPS
# ============================================================================


def op_checks(seed: int = 0, tol: float = DEFAULT_TOL) -> list[GradCheckReport]:
    """Every tape op on small random inputs."""
    rng = np.random.default_rng(seed)
    a = _param(rng, "a", 3, 4)
    b = _param(rng, "b", 4, 2)
    c = _param(rng, "c", 3, 4)
    row = _param(rng, "row", 1, 4)
    positive = _param(rng, "positive", 3, 4, low=0.2)
    probs = _param(rng, "probs", 1, 6, low=0.05)
    mask = np.where(rng.uniform(size=(3, 4)) < 0.3, MASKED, 0.0)
    mask[0] = MASKED
    target = (rng.uniform(size=(1, 6)) < 0.5).astype(np.float64)

    cases: dict[str, tuple[LossFn, list[Param]]] = {
        "matmul": (lambda t: readout(t, t.matmul(a, b)), [a, b]),
        "transpose": (lambda t: readout(t, t.transpose(a)), [a]),
        "add": (lambda t: readout(t, t.add(a, row)), [a, row]),
        "sub": (lambda t: readout(t, t.sub(a, c)), [a, c]),
        "mul": (lambda t: readout(t, t.mul(a, row)), [a, row]),
        "div": (lambda t: readout(t, t.div(a, positive)), [a, positive]),
        "minimum": (lambda t: readout(t, t.minimum(a, c)), [a, c]),
        "maximum": (lambda t: readout(t, t.maximum(a, c)), [a, c]),
        "sigmoid": (lambda t: readout(t, t.sigmoid(a)), [a]),
        "relu": (lambda t: readout(t, t.relu(a)), [a]),
        "softplus": (lambda t: readout(t, t.softplus(a)), [a]),
        "exp": (lambda t: readout(t, t.exp(a)), [a]),
        "log": (lambda t: readout(t, t.log(positive)), [positive]),
        "clamp_min": (lambda t: readout(t, t.clamp_min(a, 0.1)), [a]),
        "smooth_l1": (lambda t: readout(t, t.smooth_l1(t.scale(a, 2.0), 1.0)), [a]),
        "mean": (lambda t: t.mean(t.mul(a, a)), [a]),
        "mean_over_rows": (lambda t: readout(t, t.mean_over_rows(a)), [a]),
        "index_rows": (lambda t: readout(t, t.index_rows(a, [2, 0, 2])), [a]),
        "slice_concat": (
            lambda t: readout(t, t.concat_cols([t.slice_cols(a, 2, 4), t.slice_cols(c, 0, 1)])),
            [a, c],
        ),
        "row_softmax": (lambda t: readout(t, t.row_softmax(a, mask)), [a]),
        "log_softmax_rows": (lambda t: readout(t, t.log_softmax_rows(a)), [a]),
        "maxpool_groups": (
            lambda t: readout(t, t.maxpool_groups(t.matmul(b, t.transpose(b)), 2)[0]),
            [b],
        ),
        "maxpool_rows": (lambda t: readout(t, t.maxpool_rows(a)[0]), [a]),
        "focal_terms": (lambda t: readout(t, t.focal_terms(probs, target, 2.0, 0.25)), [probs]),
    }
    return [
        grad_check(fn, params, tol=tol, name=f"op.{name}") for name, (fn, params) in cases.items()
    ]


# ============================================================================
# LOSSES
# ============================================================================


def loss_fn_checks(seed: int = 0, tol: float = DEFAULT_TOL) -> list[GradCheckReport]:
    """Mask losses, weights, fusion and the GIoU loss."""
    rng = np.random.default_rng(seed + 1)
    asa = get_preset("toy").asa
    open_weights = asa.model_copy(update={"stop_weight_grad": False})
    pred = _param(rng, "pred", 1, 6, low=0.05)
    query = _param(rng, "query", 1, 6, low=0.05)
    mu = _param(rng, "mu", 1, 1, low=0.1)
    target = (rng.uniform(size=6) < 0.5).astype(np.float64)
    center = _param(rng, "center", 1, 3, low=0.0)
    size = _param(rng, "size", 1, 3, low=0.3)
    gt = Aabb(center=(0.4, 0.5, 0.6), size=(0.7, 0.5, 0.6))

    cases: dict[str, tuple[LossFn, list[Param]]] = {
        "focal_loss": (lambda t: focal_loss(t, pred, target, asa), [pred]),
        "dice_loss": (lambda t: dice_loss(t, pred, target, asa.dice_eps), [pred]),
        "w_focal": (lambda t: readout(t, w_focal_node(t, query, asa)), [query]),
        "point_weighted_focal": (
            lambda t: point_weighted_focal(t, pred, target, query, open_weights),
            [pred, query],
        ),
        "fuse_masks": (lambda t: readout(t, fuse_masks(t, pred, query, mu)), [pred, query, mu]),
        "giou_loss": (lambda t: giou_loss(t, center, size, gt), [center, size]),
    }
    return [
        grad_check(fn, params, tol=tol, name=f"loss.{name}") for name, (fn, params) in cases.items()
    ]


# ============================================================================
# MODEL COMPONENTS
# ============================================================================


def _prefixed(model: GroundingModel, prefix: str) -> list[Param]:
    return [param for param in model.store if param.name.startswith(prefix) and not param.frozen]


def module_checks(
    config: RunConfig, sample: SceneSample, tol: float = DEFAULT_TOL
) -> list[GradCheckReport]:
    """Each component with its own parameters, on fixed inputs from the other components."""
    model = GroundingModel(config)
    table = model.neighbors(sample)
    features = sample.cloud.features()

    base = Tape()
    visual, text, objects = cross_modal_encode(
        base,
        model.encoder,
        encode_points(base, model.encoder, features),
        encode_text(base, model.encoder, sample.tokens),
    )
    superpoints = rsa_forward(base, model.rsa, visual, table)
    fixed_visual = base.constant(visual.value)
    fixed_text = base.constant(text.value)
    fixed_objects = base.constant(objects.value)
    fixed_superpoints = base.constant(superpoints.value)

    def encoder_fn(t: Tape) -> Node:
        v = encode_points(t, model.encoder, features)
        w = encode_text(t, model.encoder, sample.tokens)
        v, w, o = cross_modal_encode(t, model.encoder, v, w)
        return t.add(t.add(readout(t, v), readout(t, w)), readout(t, o))

    def rsa_fn(t: Tape) -> Node:
        return readout(t, rsa_forward(t, model.rsa, fixed_visual, table))

    def res_fn(t: Tape) -> Node:
        decoded = decode_masks(t, model.res, fixed_text, fixed_superpoints)
        token, _ = select_highest_token(t, decoded.queries, fixed_superpoints)
        return readout(t, predict_mask(t, token, fixed_superpoints))

    def rec_fn(t: Tape) -> Node:
        outputs = rec_decode(t, model.rec, fixed_objects, fixed_visual, fixed_text)
        total: Node | None = None
        for queries in outputs:
            prediction = predict_layer(t, model.rec, queries, fixed_text)
            part = t.add(
                t.add(readout(t, prediction.centers), readout(t, prediction.sizes)),
                readout(t, prediction.scores),
            )
            total = part if total is None else t.add(total, part)
        assert total is not None
        return total

    cases: dict[str, tuple[LossFn, list[Param]]] = {
        "encoder": (encoder_fn, _prefixed(model, "encoder.")),
        "rsa": (rsa_fn, _prefixed(model, "rsa.")),
        "res_decoder": (res_fn, _prefixed(model, "res.layer")),
        "rec_branch": (rec_fn, _prefixed(model, "rec.")),
    }
    reports = []
    for name, (fn, params) in cases.items():
        if params:
            reports.append(
                grad_check(fn, params, tol=tol, name=f"module.{name}", max_entries=LOSS_MAX_ENTRIES)
            )
    return reports


def full_loss_check(
    config: RunConfig,
    sample: SceneSample,
    tol: float = DEFAULT_TOL,
    max_entries: int | None = LOSS_MAX_ENTRIES,
) -> GradCheckReport:
    """The total training loss against every trainable parameter."""
    model = GroundingModel(config)
    params = [param for param in model.store if not param.frozen]
    return grad_check(
        lambda t: model.loss(t, sample)[0],
        params,
        tol=tol,
        name="loss.total",
        max_entries=max_entries,
        rng=np.random.default_rng(config.seed),
    )


def gradcheck_suite(
    config: RunConfig | None = None,
    sample: SceneSample | None = None,
    tol: float = DEFAULT_TOL,
) -> SuiteReport:
    """Ops, loss functions, model components and the full loss; defaults to the toy preset."""
    run_config = config if config is not None else get_preset("toy")
    toy = sample if sample is not None else toy_sample()
    started = time.perf_counter()
    checks = [
        *op_checks(run_config.seed, tol),
        *loss_fn_checks(run_config.seed, tol),
        *module_checks(run_config, toy, tol),
        full_loss_check(run_config, toy, tol),
    ]
    report = SuiteReport(checks=checks, seconds=time.perf_counter() - started)
    for failure in report.failures():
        logger.warning(
            "gradient check %s failed: max rel error %.3g", failure.name, failure.max_rel_error
        )
    logger.info(
        "gradient suite: %d/%d passed in %.1fs",
        len(checks) - len(report.failures()),
        len(checks),
        report.seconds,
    )
    return report
