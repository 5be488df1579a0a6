"""
Superpoint features from ball-query neighborhoods.

Each neighbor's feature is fused with an MLP encoding of its offset from the
superpoint center (``plus``: r + v, ``mul``: r * v + v) and the K fused rows
are max-pooled column by column.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from chuk_grounding.errors import DataConsistencyError, DimensionError, PreconditionError
from chuk_grounding.geometry import NeighborTable
from chuk_grounding.numeric import (
    MlpParams,
    MlpSpec,
    Node,
    ParamStore,
    Tape,
    init_mlp,
    mlp_forward,
)

Fusion = Literal["plus", "mul"]
RSA_PREFIX = "rsa.relative_mlp"


@dataclass
class RsaState:
    relative_mlp: MlpParams
    fusion: Fusion


def init_rsa(store: ParamStore, d: int, fusion: Fusion = "plus", enabled: bool = True) -> RsaState:
    """A disabled RSA keeps a zero, frozen MLP, so every encoding is exactly zero."""
    mlp = init_mlp(
        store, RSA_PREFIX, MlpSpec.hidden(3, d, d), zero=not enabled, frozen=not enabled
    )
    return RsaState(relative_mlp=mlp, fusion=fusion)


def encode_relative(tape: Tape, state: RsaState, offsets: np.ndarray) -> Node:
    """Raw offsets ``o_s - o_s^k`` (rows of 3, meters) to ``d``-wide encodings."""
    x = np.asarray(offsets, dtype=np.float64).reshape(-1, 3)
    return mlp_forward(tape, state.relative_mlp, tape.constant(x))


def fuse_relative(tape: Tape, neighbors: Node, encodings: Node, fusion: Fusion) -> Node:
    if neighbors.shape != encodings.shape:
        raise DimensionError(f"neighbor rows {neighbors.shape} vs encodings {encodings.shape}")
    if fusion == "plus":
        return tape.add(encodings, neighbors)
    return tape.add(tape.mul(encodings, neighbors), neighbors)


def aggregate_superpoint(tape: Tape, neighbors: Node, encodings: Node, fusion: Fusion) -> Node:
    """One superpoint: fuse K neighbor rows with their encodings, then max-pool to ``1 x d``."""
    if neighbors.rows == 0:
        raise PreconditionError("aggregation needs K >= 1 neighbors")
    pooled, _ = tape.maxpool_rows(fuse_relative(tape, neighbors, encodings, fusion))
    return pooled


def rsa_forward(tape: Tape, state: RsaState, visual: Node, table: NeighborTable) -> Node:
    """
    ``m x d`` superpoint features from ``n x d`` refined point features.

    Raises:
        DataConsistencyError: If the table lists a point the features do not have
    """
    indices = table.indices.reshape(-1)
    if indices.size and (indices.min() < 0 or indices.max() >= visual.rows):
        raise DataConsistencyError(
            f"neighbor index {int(indices.max())} out of range for {visual.rows} point features"
        )
    gathered = tape.index_rows(visual, indices)
    encodings = encode_relative(tape, state, table.offsets.reshape(-1, 3))
    fused = fuse_relative(tape, gathered, encodings, state.fusion)
    pooled, _ = tape.maxpool_groups(fused, table.k)
    return pooled
