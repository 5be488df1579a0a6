"""
Mask branch: masked cross-attention from textual queries to superpoints.

Each layer restricts attention to superpoints whose similarity to the
query passes the threshold; rows with no surviving superpoint attend
everywhere. The query row with the largest total similarity predicts the
mask and the fusion confidence.
"""

import logging
from dataclasses import dataclass

import numpy as np

from chuk_grounding.model.attention import (
    AttentionParams,
    attend,
    ffn_block,
    init_attention,
    init_ffn,
)
from chuk_grounding.numeric import (
    MASKED,
    FloatArray,
    MlpParams,
    MlpSpec,
    Node,
    ParamStore,
    Tape,
    init_mlp,
    mlp_forward,
)

logger = logging.getLogger(__name__)


@dataclass
class ResLayer:
    attention: AttentionParams
    ffn: MlpParams


@dataclass
class ResDecoderState:
    layers: list[ResLayer]
    confidence_mlp: MlpParams
    tau: float = 0.5


@dataclass
class MaskDecodeResult:
    queries: Node
    fallback_rows: int
    similarities: list[FloatArray]


def init_res_decoder(
    store: ParamStore, d: int, layers: int, heads: int, ffn_mult: int, tau: float = 0.5
) -> ResDecoderState:
    blocks = [
        ResLayer(
            attention=init_attention(
                store, f"res.layer{i}.attn", d, heads, output_projection=False
            ),
            ffn=init_ffn(store, f"res.layer{i}.ffn", d, ffn_mult),
        )
        for i in range(layers)
    ]
    confidence = init_mlp(store, "res.confidence", MlpSpec.hidden(d, d, 1))
    return ResDecoderState(layers=blocks, confidence_mlp=confidence, tau=tau)


def attention_mask(
    queries: Node, superpoints: Node, tau: float
) -> tuple[FloatArray, FloatArray, int]:
    """
    Similarity ``M = S V_s^T`` and additive mask ``A`` (0 where sigmoid(M) >= tau, else -inf).

    Rows without any passing entry become all zero; their count is returned.
    """
    similarity = queries.value @ superpoints.value.T
    probability = np.exp(-np.logaddexp(0.0, -similarity))
    mask = np.where(probability >= tau, 0.0, MASKED)
    empty = np.all(mask == MASKED, axis=1)
    mask[empty] = 0.0
    return similarity, mask, int(empty.sum())


def decoder_layer(
    tape: Tape, layer: ResLayer, queries: Node, superpoints: Node, mask: FloatArray
) -> Node:
    """Masked attention with residual, then the residual FFN."""
    attended = tape.add(queries, attend(tape, layer.attention, queries, superpoints, mask))
    return ffn_block(tape, layer.ffn, attended)


def decode_masks(
    tape: Tape, state: ResDecoderState, initial: Node, superpoints: Node
) -> MaskDecodeResult:
    """Run every layer, each masked by the previous layer's similarities."""
    queries = initial
    fallback = 0
    similarities = []
    for layer in state.layers:
        similarity, mask, empty = attention_mask(queries, superpoints, state.tau)
        similarities.append(similarity)
        fallback += empty
        queries = decoder_layer(tape, layer, queries, superpoints, mask)
    if fallback:
        logger.debug("attention mask fallback on %d query rows", fallback)
    return MaskDecodeResult(queries=queries, fallback_rows=fallback, similarities=similarities)


def select_highest_token(tape: Tape, queries: Node, superpoints: Node) -> tuple[Node, int]:
    """The query row with the largest summed similarity to the superpoints (first on ties)."""
    scores = (queries.value @ superpoints.value.T).sum(axis=1)
    index = int(np.argmax(scores))
    return tape.index_rows(queries, [index]), index


def predict_mask(tape: Tape, token: Node, superpoints: Node) -> Node:
    """``1 x m`` mask logits ``S_h V_s^T``."""
    return tape.matmul(token, tape.transpose(superpoints))


def confidence(tape: Tape, state: ResDecoderState, token: Node) -> Node:
    """``sigmoid(MLP(S_h))`` as a ``1 x 1`` node."""
    return tape.sigmoid(mlp_forward(tape, state.confidence_mlp, token))
