"""
Box branch: object-query decoder, box and score heads, and the query mask.

Every decoder layer's queries go through the same box and score heads so
each layer can be supervised.
"""

from dataclasses import dataclass

import numpy as np

from chuk_grounding.errors import PreconditionError
from chuk_grounding.geometry import Aabb
from chuk_grounding.model.attention import (
    AttentionParams,
    ffn_block,
    init_attention,
    init_ffn,
    residual_attention,
)
from chuk_grounding.numeric import (
    FloatArray,
    MlpParams,
    MlpSpec,
    Node,
    Param,
    ParamStore,
    Tape,
    init_mlp,
    mlp_forward,
)

SIZE_FLOOR = 1e-3


@dataclass
class RecLayer:
    self_attn: AttentionParams
    cross_visual: AttentionParams
    cross_text: AttentionParams
    ffn: MlpParams


@dataclass
class RecState:
    layers: list[RecLayer]
    box_head: MlpParams
    score_weight: Param


@dataclass
class BoxPrediction:
    """One layer's boxes (``k x 3`` centers and sizes), scores ``1 x k`` and query features."""

    centers: Node
    sizes: Node
    scores: Node
    queries: Node

    def boxes(self) -> FloatArray:
        """``k x 6`` array of ``(cx, cy, cz, w, h, d)``."""
        return np.concatenate([self.centers.value, self.sizes.value], axis=1)

    def box(self, index: int) -> Aabb:
        return Aabb.from_array(self.boxes()[index])


def init_rec_branch(
    store: ParamStore, d: int, layers: int, heads: int, ffn_mult: int
) -> RecState:
    blocks = [
        RecLayer(
            self_attn=init_attention(store, f"rec.layer{i}.self", d, heads),
            cross_visual=init_attention(store, f"rec.layer{i}.cross_v", d, heads),
            cross_text=init_attention(store, f"rec.layer{i}.cross_t", d, heads),
            ffn=init_ffn(store, f"rec.layer{i}.ffn", d, ffn_mult),
        )
        for i in range(layers)
    ]
    box_head = init_mlp(store, "rec.box_head", MlpSpec.hidden(d, d, 6))
    score_weight = store.uniform("rec.score_weight", d, d)
    return RecState(layers=blocks, box_head=box_head, score_weight=score_weight)


def rec_decode(
    tape: Tape, state: RecState, objects: Node, visual: Node, text: Node
) -> list[Node]:
    """Query features after each layer: self-attention, cross to V', cross to T', FFN."""
    queries = objects
    outputs = []
    for layer in state.layers:
        queries = residual_attention(tape, layer.self_attn, queries, queries)
        queries = residual_attention(tape, layer.cross_visual, queries, visual)
        queries = residual_attention(tape, layer.cross_text, queries, text)
        queries = ffn_block(tape, layer.ffn, queries)
        outputs.append(queries)
    return outputs


def predict_boxes(tape: Tape, state: RecState, queries: Node) -> tuple[Node, Node]:
    """Centers raw, sizes ``softplus(raw) + 1e-3``."""
    raw = mlp_forward(tape, state.box_head, queries)
    centers = tape.slice_cols(raw, 0, 3)
    sizes = tape.add_scalar(tape.softplus(tape.slice_cols(raw, 3, 6)), SIZE_FLOOR)
    return centers, sizes


def grounding_scores(tape: Tape, state: RecState, queries: Node, text: Node) -> Node:
    """``1 x k`` bilinear scores ``q_i W t_mean^T`` against the mean text token."""
    pooled = tape.mean_over_rows(text)
    projected = tape.matmul(queries, state.score_weight)
    return tape.matmul(pooled, tape.transpose(projected))


def predict_layer(
    tape: Tape, state: RecState, queries: Node, text: Node
) -> BoxPrediction:
    centers, sizes = predict_boxes(tape, state, queries)
    scores = grounding_scores(tape, state, queries, text)
    return BoxPrediction(centers=centers, sizes=sizes, scores=scores, queries=queries)


def select_box(scores: FloatArray) -> int:
    """Index of the highest score (lowest index on ties)."""
    flat = np.asarray(scores).reshape(-1)
    if flat.size == 0:
        raise PreconditionError("select_box needs at least one query")
    return int(np.argmax(flat))


def query_mask(
    tape: Tape, query: Node, superpoints: Node, tau: float, sigmoid_first: bool = True
) -> tuple[Node, FloatArray]:
    """
    ``M_q = sigmoid(Q_box V_s^T)`` (``1 x m``) and its binary view.

    With ``sigmoid_first`` the probabilities are thresholded at ``tau``;
    otherwise the raw dot products are.
    """
    raw = tape.matmul(query, tape.transpose(superpoints))
    probs = tape.sigmoid(raw)
    thresholded = probs.value if sigmoid_first else raw.value
    return probs, (thresholded >= tau).astype(np.float64)
