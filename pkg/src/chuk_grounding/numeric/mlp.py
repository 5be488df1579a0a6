"""
Multi-layer perceptrons as sequences of affine + activation layers.
"""

from dataclasses import dataclass
from typing import Literal

from pydantic import BaseModel, Field, model_validator

from chuk_grounding.errors import DimensionError
from chuk_grounding.numeric.params import ParamStore
from chuk_grounding.numeric.tape import Node, Param, Tape

Activation = Literal["relu", "identity"]


class MlpSpec(BaseModel):
    """Layer widths (input first) and one activation per affine layer."""

    widths: list[int] = Field(..., min_length=2, description="Input width followed by layer widths")
    activations: list[Activation] = Field(..., description="Activation after each affine layer")

    @model_validator(mode="after")
    def _check_layers(self) -> "MlpSpec":
        if len(self.activations) != len(self.widths) - 1:
            raise ValueError(
                f"{len(self.widths) - 1} layers need {len(self.widths) - 1} activations, "
                f"got {len(self.activations)}"
            )
        if any(width < 1 for width in self.widths):
            raise ValueError("layer widths must be positive")
        return self

    @classmethod
    def hidden(cls, width_in: int, hidden: int, width_out: int) -> "MlpSpec":
        """Two-layer ``in -> hidden (relu) -> out`` spec."""
        return cls(widths=[width_in, hidden, width_out], activations=["relu", "identity"])

    @property
    def layers(self) -> int:
        return len(self.activations)


@dataclass
class MlpParams:
    spec: MlpSpec
    weights: list[Param]
    biases: list[Param]

    def parameters(self) -> list[Param]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]


def init_mlp(
    store: ParamStore, name: str, spec: MlpSpec, zero: bool = False, frozen: bool = False
) -> MlpParams:
    """Register ``{name}.w{i}`` / ``{name}.b{i}``; biases start at zero."""
    weights: list[Param] = []
    biases: list[Param] = []
    for i, (width_in, width_out) in enumerate(zip(spec.widths[:-1], spec.widths[1:])):
        if zero:
            weights.append(store.zeros(f"{name}.w{i}", width_in, width_out, frozen=frozen))
        else:
            weights.append(store.uniform(f"{name}.w{i}", width_in, width_out, frozen=frozen))
        biases.append(store.zeros(f"{name}.b{i}", 1, width_out, frozen=frozen))
    return MlpParams(spec=spec, weights=weights, biases=biases)


def mlp_forward(tape: Tape, mlp: MlpParams, x: Node) -> Node:
    if x.cols != mlp.spec.widths[0]:
        raise DimensionError(f"MLP expects {mlp.spec.widths[0]} input columns, got {x.cols}")
    h = x
    for weight, bias, activation in zip(mlp.weights, mlp.biases, mlp.spec.activations):
        h = tape.add(tape.matmul(h, weight), bias)
        if activation == "relu":
            h = tape.relu(h)
    return h
