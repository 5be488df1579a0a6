"""
Model package - encoders, superpoint aggregation, both decoder branches and
the assembled grounding model.
"""

from chuk_grounding.model.attention import (
    AttentionParams,
    attend,
    ffn_block,
    init_attention,
    init_ffn,
    residual_attention,
)
from chuk_grounding.model.encoder import (
    POINT_FEATURES,
    TEXT_PREFIXES,
    VISUAL_PREFIX,
    EncoderLayer,
    EncoderState,
    cross_modal_encode,
    encode_points,
    encode_text,
    init_encoder,
)
from chuk_grounding.model.rsa import (
    RSA_PREFIX,
    Fusion,
    RsaState,
    aggregate_superpoint,
    encode_relative,
    fuse_relative,
    init_rsa,
    rsa_forward,
)
from chuk_grounding.model.res_decoder import (
    MaskDecodeResult,
    ResDecoderState,
    ResLayer,
    attention_mask,
    confidence,
    decode_masks,
    decoder_layer,
    init_res_decoder,
    predict_mask,
    select_highest_token,
)
from chuk_grounding.model.rec_branch import (
    SIZE_FLOOR,
    BoxPrediction,
    RecLayer,
    RecState,
    grounding_scores,
    init_rec_branch,
    predict_boxes,
    predict_layer,
    query_mask,
    rec_decode,
    select_box,
)
from chuk_grounding.model.grounder import (
    ForwardOutputs,
    GroundingModel,
    LossBreakdown,
    Prediction,
)

__all__ = [
    "AttentionParams",
    "attend",
    "ffn_block",
    "init_attention",
    "init_ffn",
    "residual_attention",
    "POINT_FEATURES",
    "TEXT_PREFIXES",
    "VISUAL_PREFIX",
    "EncoderLayer",
    "EncoderState",
    "cross_modal_encode",
    "encode_points",
    "encode_text",
    "init_encoder",
    "RSA_PREFIX",
    "Fusion",
    "RsaState",
    "aggregate_superpoint",
    "encode_relative",
    "fuse_relative",
    "init_rsa",
    "rsa_forward",
    "MaskDecodeResult",
    "ResDecoderState",
    "ResLayer",
    "attention_mask",
    "confidence",
    "decode_masks",
    "decoder_layer",
    "init_res_decoder",
    "predict_mask",
    "select_highest_token",
    "SIZE_FLOOR",
    "BoxPrediction",
    "RecLayer",
    "RecState",
    "grounding_scores",
    "init_rec_branch",
    "predict_boxes",
    "predict_layer",
    "query_mask",
    "rec_decode",
    "select_box",
    "ForwardOutputs",
    "GroundingModel",
    "LossBreakdown",
    "Prediction",
]
