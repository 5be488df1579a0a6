"""
Point and text encoders plus the cross-modal encoder.

Visual tokens come from a per-point MLP on xyz+rgb, text tokens from an
embedding table with learned positions. Each encoder layer runs
self-attention within each modality, cross-attention in both directions
and an FFN, all residual. Object queries are free learned embeddings
refined by one cross-attention over the refined visual tokens.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from chuk_grounding.config import ModelDims
from chuk_grounding.errors import DimensionError, PreconditionError, VocabularyError
from chuk_grounding.model.attention import (
    AttentionParams,
    ffn_block,
    init_attention,
    init_ffn,
    residual_attention,
)
from chuk_grounding.numeric import (
    MlpParams,
    MlpSpec,
    Node,
    Param,
    ParamStore,
    Tape,
    init_mlp,
    mlp_forward,
)

POINT_FEATURES = 6
VISUAL_PREFIX = "encoder.point_mlp"
TEXT_PREFIXES = ("encoder.token_table", "encoder.positions")


@dataclass
class EncoderLayer:
    self_v: AttentionParams
    self_t: AttentionParams
    cross_v: AttentionParams
    cross_t: AttentionParams
    ffn_v: MlpParams
    ffn_t: MlpParams


@dataclass
class EncoderState:
    point_mlp: MlpParams
    token_table: Param
    positions: Param | None
    queries: Param
    query_cross: AttentionParams
    layers: list[EncoderLayer] = field(default_factory=list)

    @property
    def vocab_size(self) -> int:
        return self.token_table.rows

    @property
    def max_tokens(self) -> int:
        return self.positions.rows if self.positions is not None else 0


def init_encoder(store: ParamStore, dims: ModelDims, vocab_size: int) -> EncoderState:
    d = dims.d
    point_mlp = init_mlp(store, VISUAL_PREFIX, MlpSpec.hidden(POINT_FEATURES, d, d))
    token_table = store.uniform("encoder.token_table", vocab_size, d, fan_in=d)
    positions = (
        store.uniform("encoder.positions", dims.max_tokens, d, fan_in=d)
        if dims.text_positional
        else None
    )
    layers = []
    for i in range(dims.encoder_layers):
        name = f"encoder.layer{i}"
        layers.append(
            EncoderLayer(
                self_v=init_attention(store, f"{name}.self_v", d, dims.heads),
                self_t=init_attention(store, f"{name}.self_t", d, dims.heads),
                cross_v=init_attention(store, f"{name}.cross_v", d, dims.heads),
                cross_t=init_attention(store, f"{name}.cross_t", d, dims.heads),
                ffn_v=init_ffn(store, f"{name}.ffn_v", d, dims.ffn_mult),
                ffn_t=init_ffn(store, f"{name}.ffn_t", d, dims.ffn_mult),
            )
        )
    queries = store.uniform("encoder.queries", dims.queries, d, fan_in=d)
    query_cross = init_attention(store, "encoder.query_cross", d, dims.heads)
    return EncoderState(
        point_mlp=point_mlp,
        token_table=token_table,
        positions=positions,
        queries=queries,
        query_cross=query_cross,
        layers=layers,
    )


def encode_points(tape: Tape, state: EncoderState, features: npt.ArrayLike) -> Node:
    """``n x 6`` xyz+rgb rows to ``n x d`` visual tokens, one point at a time."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise PreconditionError("encode_points needs at least one point")
    if x.shape[1] != POINT_FEATURES:
        raise DimensionError(f"point features must have {POINT_FEATURES} columns, got {x.shape[1]}")
    return mlp_forward(tape, state.point_mlp, tape.constant(x))


def encode_text(tape: Tape, state: EncoderState, tokens: Sequence[int]) -> Node:
    """
    Table lookup plus learned positional rows.

    Raises:
        VocabularyError: If a token id is outside the table
        DimensionError: If the expression is longer than the positional table
    """
    ids = np.asarray(tokens, dtype=np.int64).reshape(-1)
    if ids.size == 0:
        raise PreconditionError("encode_text needs at least one token")
    bad = ids[(ids < 0) | (ids >= state.vocab_size)]
    if bad.size:
        raise VocabularyError(f"token id {int(bad[0])} outside a vocabulary of {state.vocab_size}")
    rows = tape.index_rows(state.token_table, ids)
    if state.positions is None:
        return rows
    if ids.size > state.max_tokens:
        raise DimensionError(f"{ids.size} tokens exceed the positional table of {state.max_tokens}")
    return tape.add(rows, tape.index_rows(state.positions, np.arange(ids.size)))


def cross_modal_encode(
    tape: Tape, state: EncoderState, visual: Node, text: Node
) -> tuple[Node, Node, Node]:
    """Refine ``(V, T)`` through every encoder layer; returns ``(V', T', O)``."""
    v, t = visual, text
    for layer in state.layers:
        v = residual_attention(tape, layer.self_v, v, v)
        t = residual_attention(tape, layer.self_t, t, t)
        v_cross = residual_attention(tape, layer.cross_v, v, t)
        t_cross = residual_attention(tape, layer.cross_t, t, v)
        v = ffn_block(tape, layer.ffn_v, v_cross)
        t = ffn_block(tape, layer.ffn_t, t_cross)
    objects = residual_attention(tape, state.query_cross, state.queries, v)
    return v, t, objects
