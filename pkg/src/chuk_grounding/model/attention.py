"""
Multi-head scaled dot-product attention and the position-wise FFN block.
"""

import math
from dataclasses import dataclass

from chuk_grounding.errors import DimensionError
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


@dataclass
class AttentionParams:
    wq: Param
    wk: Param
    wv: Param
    wo: Param | None
    heads: int

    def parameters(self) -> list[Param]:
        params = [self.wq, self.wk, self.wv]
        if self.wo is not None:
            params.append(self.wo)
        return params


def init_attention(
    store: ParamStore, name: str, d: int, heads: int, output_projection: bool = True
) -> AttentionParams:
    if d % heads:
        raise DimensionError(f"{heads} heads do not divide width {d}")
    return AttentionParams(
        wq=store.uniform(f"{name}.wq", d, d),
        wk=store.uniform(f"{name}.wk", d, d),
        wv=store.uniform(f"{name}.wv", d, d),
        wo=store.uniform(f"{name}.wo", d, d) if output_projection else None,
        heads=heads,
    )


def attend(
    tape: Tape,
    attn: AttentionParams,
    queries: Node,
    keys: Node,
    additive_mask: FloatArray | None = None,
) -> Node:
    """
    ``softmax(Q K^T / sqrt(d_head) + A) V`` per head, heads concatenated.

    Q comes from ``queries``, K and V from ``keys``; the same additive mask
    applies to every head. No residual is added here.
    """
    if queries.cols != keys.cols:
        raise DimensionError(f"attention widths differ: {queries.cols} vs {keys.cols}")
    q = tape.matmul(queries, attn.wq)
    k = tape.matmul(keys, attn.wk)
    v = tape.matmul(keys, attn.wv)
    width = q.cols // attn.heads
    scale = 1.0 / math.sqrt(width)

    outputs = []
    for h in range(attn.heads):
        start, stop = h * width, (h + 1) * width
        qh = tape.slice_cols(q, start, stop) if attn.heads > 1 else q
        kh = tape.slice_cols(k, start, stop) if attn.heads > 1 else k
        vh = tape.slice_cols(v, start, stop) if attn.heads > 1 else v
        scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), scale)
        weights = tape.row_softmax(scores, additive_mask)
        outputs.append(tape.matmul(weights, vh))

    out = tape.concat_cols(outputs) if attn.heads > 1 else outputs[0]
    if attn.wo is not None:
        out = tape.matmul(out, attn.wo)
    return out


def init_ffn(store: ParamStore, name: str, d: int, mult: int) -> MlpParams:
    return init_mlp(store, name, MlpSpec.hidden(d, d * mult, d))


def ffn_block(tape: Tape, ffn: MlpParams, x: Node) -> Node:
    """``x + FFN(x)``."""
    return tape.add(x, mlp_forward(tape, ffn, x))


def residual_attention(
    tape: Tape,
    attn: AttentionParams,
    queries: Node,
    keys: Node,
    additive_mask: FloatArray | None = None,
) -> Node:
    """``queries + attend(queries, keys)``."""
    return tape.add(queries, attend(tape, attn, queries, keys, additive_mask))
