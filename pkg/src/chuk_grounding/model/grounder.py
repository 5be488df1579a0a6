"""
The assembled grounding model.

``GroundingModel`` owns the parameter store and the per-component states,
runs the forward pass of both branches on one sample, and turns the result
into a loss (with a full breakdown) or an evaluation prediction.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict

from chuk_grounding.config import RunConfig
from chuk_grounding.data import VOCAB_SIZE, SceneSample
from chuk_grounding.geometry import (
    Aabb,
    NeighborTable,
    SuperpointMask,
    SuperpointPartition,
    ball_query,
    box_to_superpoint_mask,
    superpoint_mask_to_point_mask,
)
from chuk_grounding.losses import (
    RecLayerTerms,
    ResLossTerms,
    fuse_masks,
    rec_losses,
    res_loss,
    total_loss,
)
from chuk_grounding.model.encoder import (
    TEXT_PREFIXES,
    VISUAL_PREFIX,
    EncoderState,
    cross_modal_encode,
    encode_points,
    encode_text,
    init_encoder,
)
from chuk_grounding.model.rec_branch import (
    BoxPrediction,
    RecState,
    init_rec_branch,
    predict_layer,
    query_mask,
    rec_decode,
    select_box,
)
from chuk_grounding.model.res_decoder import (
    ResDecoderState,
    confidence,
    decode_masks,
    init_res_decoder,
    predict_mask,
    select_highest_token,
)
from chuk_grounding.model.rsa import RsaState, init_rsa, rsa_forward
from chuk_grounding.numeric import AdamW, FloatArray, Node, ParamStore, Tape

logger = logging.getLogger(__name__)


# ============================================================================
# OUTPUT MODELS
# ============================================================================


@dataclass
class ForwardOutputs:
    """Every intermediate the losses and the evaluator need."""

    superpoints: Node
    layer_predictions: list[BoxPrediction]
    selected: int
    query_probs: Node
    query_binary: FloatArray
    mask_probs: Node
    token_index: int
    confidence: Node | None
    fused: Node | None
    fallback_rows: int

    @property
    def final_probs(self) -> Node:
        """The fused mask, or the predicted mask when alignment is off."""
        return self.fused if self.fused is not None else self.mask_probs


class LossBreakdown(BaseModel):
    """Unweighted loss terms of one sample together with the weights that combine them."""

    rec_layers: list[RecLayerTerms]
    res: ResLossTerms
    loss_rec: float
    loss_res: float
    total: float
    gamma1: float
    gamma2: float
    positive_query: int
    fallback_rows: int = 0

    @property
    def loss_align_focal(self) -> float:
        return self.res.focal_point

    @property
    def loss_align_dice(self) -> float:
        return self.res.dice_mask

    def components(self) -> dict[str, float]:
        """The values logged per epoch."""
        return {
            "loss_total": self.total,
            "loss_rec": self.loss_rec,
            "loss_res": self.loss_res,
            "loss_align_focal": self.loss_align_focal,
            "loss_align_dice": self.loss_align_dice,
        }


class Prediction(BaseModel):
    """What the evaluator reads off one forward pass."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    box: Aabb
    selected: int
    superpoint_mask: np.ndarray
    point_mask: np.ndarray
    confidence: float | None = None


# ============================================================================
# MODEL
# ============================================================================


class GroundingModel:
    """
    Point/text encoders, superpoint aggregation, the mask branch and the box branch.

    Parameters are created in a fixed order (encoder, aggregation, mask
    branch, box branch) from ``config.seed``, so two models built from the
    same config are identical.
    """

    def __init__(self, config: RunConfig, vocab_size: int = VOCAB_SIZE) -> None:
        self.config = config
        self.store = ParamStore(np.random.default_rng(config.seed))
        dims = config.dims
        flags = config.ablation
        self.encoder: EncoderState = init_encoder(self.store, dims, vocab_size)
        self.rsa: RsaState = init_rsa(
            self.store, dims.d, fusion=flags.fusion, enabled=flags.rsa == "on"
        )
        self.res: ResDecoderState = init_res_decoder(
            self.store, dims.d, dims.res_layers, dims.heads, dims.ffn_mult, config.asa.tau
        )
        self.rec: RecState = init_rec_branch(
            self.store, dims.d, dims.rec_layers, dims.heads, dims.ffn_mult
        )
        if flags.freeze_text == "on":
            frozen = sum(self.store.freeze(prefix) for prefix in TEXT_PREFIXES)
            logger.debug("froze %d text parameters", frozen)
        self._neighbors: dict[str, tuple[SuperpointPartition, NeighborTable]] = {}

    @property
    def vocab_size(self) -> int:
        return self.encoder.vocab_size

    def optimizer(self) -> AdamW:
        """AdamW over the store, the point encoder on its own learning rate."""
        optim = self.config.optim
        return AdamW(
            self.store,
            lr=optim.lr,
            beta1=optim.beta1,
            beta2=optim.beta2,
            eps=optim.eps,
            weight_decay=optim.weight_decay,
            lr_groups=[(VISUAL_PREFIX, optim.lr_visual)],
        )

    def neighbors(self, sample: SceneSample) -> NeighborTable:
        """Ball-query table of a sample, cached per sample id and partition."""
        cached = self._neighbors.get(sample.id)
        if cached is not None and cached[0] is sample.partition:
            return cached[1]
        geometry = self.config.geometry
        table = ball_query(
            sample.partition, sample.cloud.positions, geometry.ball_k, geometry.ball_radius
        )
        self._neighbors[sample.id] = (sample.partition, table)
        return table

    def forward(
        self, tape: Tape, sample: SceneSample, tokens: Sequence[int] | None = None
    ) -> ForwardOutputs:
        flags = self.config.ablation
        tau = self.config.asa.tau
        asa_on = flags.asa == "on"

        visual = encode_points(tape, self.encoder, sample.cloud.features())
        text = encode_text(tape, self.encoder, sample.tokens if tokens is None else tokens)
        visual, text, objects = cross_modal_encode(tape, self.encoder, visual, text)
        superpoints = rsa_forward(tape, self.rsa, visual, self.neighbors(sample))

        initial = text if flags.s0_source == "text" else visual
        decoded = decode_masks(tape, self.res, initial, superpoints)
        token, token_index = select_highest_token(tape, decoded.queries, superpoints)
        mask_probs = tape.sigmoid(predict_mask(tape, token, superpoints))
        mu = confidence(tape, self.res, token) if asa_on else None

        layer_queries = rec_decode(tape, self.rec, objects, visual, text)
        predictions = [predict_layer(tape, self.rec, q, text) for q in layer_queries]
        last = predictions[-1]
        selected = select_box(last.scores.value)
        box_query = tape.index_rows(last.queries, [selected])
        query_probs, query_binary = query_mask(
            tape, box_query, superpoints, tau, sigmoid_first=flags.mq_sigmoid == "on"
        )

        fused = fuse_masks(tape, mask_probs, query_probs, mu) if mu is not None else None
        return ForwardOutputs(
            superpoints=superpoints,
            layer_predictions=predictions,
            selected=selected,
            query_probs=query_probs,
            query_binary=query_binary,
            mask_probs=mask_probs,
            token_index=token_index,
            confidence=mu,
            fused=fused,
            fallback_rows=decoded.fallback_rows,
        )

    def loss(self, tape: Tape, sample: SceneSample) -> tuple[Node, LossBreakdown]:
        """The total training loss of one sample and its breakdown."""
        config = self.config
        flags = config.ablation
        out = self.forward(tape, sample)

        l_rec, layer_terms, positive = rec_losses(
            tape, out.layer_predictions, sample.gt_box, config.rec_loss
        )

        if flags.align_target == "mask":
            align_target = out.query_binary
            align_quality = out.query_probs
        else:
            box = out.layer_predictions[-1].box(out.selected)
            align_target = box_to_superpoint_mask(box, sample.partition).reshape(1, -1)
            align_quality = tape.constant(align_target)

        l_res, res_terms = res_loss(
            tape,
            out.mask_probs,
            out.query_probs,
            align_target,
            align_quality,
            out.fused,
            sample.gt_superpoint_mask,
            sample.partition.centers,
            config.asa,
            adaptive=flags.adaptive_losses,
            asa=flags.asa == "on",
        )
        total = total_loss(tape, l_rec, l_res, config.asa, config.dims.rec_layers)
        breakdown = LossBreakdown(
            rec_layers=layer_terms,
            res=res_terms,
            loss_rec=l_rec.item(),
            loss_res=l_res.item(),
            total=total.item(),
            gamma1=config.gamma1,
            gamma2=config.asa.gamma2,
            positive_query=positive,
            fallback_rows=out.fallback_rows,
        )
        return total, breakdown

    def predict(self, sample: SceneSample, tokens: Sequence[int] | None = None) -> Prediction:
        """Selected box and the final mask thresholded at ``tau``, on superpoints and points."""
        out = self.forward(Tape(), sample, tokens)
        mask = SuperpointMask.from_probabilities(out.final_probs.value, self.config.asa.tau)
        mask.check_partition(sample.partition)
        spmask = mask.binary()
        return Prediction(
            box=out.layer_predictions[-1].box(out.selected),
            selected=out.selected,
            superpoint_mask=spmask,
            point_mask=superpoint_mask_to_point_mask(sample.partition, spmask),
            confidence=out.confidence.item() if out.confidence is not None else None,
        )
