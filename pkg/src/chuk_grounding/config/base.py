"""
Run configuration models.

A ``RunConfig`` is composed of sub-models, one per concern; every field
carries a description so the config reference can be generated from the
models themselves.
"""

from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator

Switch = Literal["on", "off"]


class ModelDims(BaseModel):
    """Widths, token budgets and layer counts."""

    d: int = Field(default=32, ge=1, description="Feature width shared by every component")
    n_points: int = Field(default=512, ge=1, description="Points per scene cloud")
    max_tokens: int = Field(
        default=12, ge=1, description="Longest expression; sizes the positional table"
    )
    queries: int = Field(default=8, ge=1, description="Object queries k of the box branch")
    encoder_layers: int = Field(default=2, ge=0, description="Cross-modal encoder layers E")
    rec_layers: int = Field(default=2, ge=1, description="Box decoder layers L")
    res_layers: int = Field(default=2, ge=1, description="Mask decoder layers D_res")
    heads: int = Field(default=1, ge=1, description="Attention heads; must divide d")
    ffn_mult: int = Field(default=2, ge=1, description="FFN hidden width as a multiple of d")
    text_positional: bool = Field(
        default=True, description="Add learned positional rows to text tokens"
    )

    @model_validator(mode="after")
    def _heads_divide_width(self) -> "ModelDims":
        if self.d % self.heads:
            raise ValueError(f"heads={self.heads} does not divide d={self.d}")
        return self


class GeometryConfig(BaseModel):
    """Superpoint grid and ball-query neighborhood."""

    cell: float = Field(default=0.25, gt=0.0, description="Grid cell edge for superpoints (m)")
    ball_k: int = Field(default=2, ge=1, description="Neighbors K per superpoint")
    ball_radius: float = Field(default=0.2, gt=0.0, description="Ball-query radius R (m)")


class RecLossWeights(BaseModel):
    """Weights of the per-layer box-branch loss."""

    alpha1: float = Field(default=5.0, ge=0.0, description="Center smooth-L1 weight")
    alpha2: float = Field(default=1.0, ge=0.0, description="Size smooth-L1 weight")
    alpha3: float = Field(default=1.0, ge=0.0, description="1 - GIoU weight")
    alpha4: float = Field(default=0.5, ge=0.0, description="Grounding-score cross-entropy weight")
    alpha5: float = Field(default=0.0, ge=0.0, description="Unused slot; kept for completeness")
    smooth_l1_beta: float = Field(default=1.0, gt=0.0, description="Smooth-L1 transition point")


class AsaConfig(BaseModel):
    """Adaptive alignment, mask-loss and total-loss constants."""

    b: float = Field(default=2.0, description="Offset b of the focal quality weight")
    mu: float = Field(default=0.5, description="Center of the focal quality weight")
    sigma2: float = Field(default=0.1, gt=0.0, description="Variance of the focal quality weight")
    beta1: float = Field(default=10.0, ge=0.0, description="Weight of all focal terms")
    beta2: float = Field(default=2.0, ge=0.0, description="Weight of all dice terms")
    gamma2: float = Field(default=1.0, ge=0.0, description="Weight of the mask-branch loss")
    gamma3: float = Field(
        default=8.0, ge=0.0, description="Weight of the keypoint loss (term is zero)"
    )
    focal_gamma: float = Field(default=2.0, ge=0.0, description="Focal focusing exponent")
    focal_alpha: float = Field(
        default=0.25, ge=0.0, le=1.0, description="Focal positive-class weight"
    )
    dice_eps: float = Field(default=1.0, gt=0.0, description="Dice smoothing")
    tau: float = Field(default=0.5, gt=0.0, lt=1.0, description="Mask threshold")
    stop_weight_grad: bool = Field(
        default=True,
        description=(
            "Treat the focal quality weights as constants, so the alignment terms train "
            "only the mask branch; false lets their gradient reach the box branch"
        ),
    )

    def gamma1(self, rec_layers: int) -> float:
        """Box-branch weight ``1 / (L + 1)``."""
        return 1.0 / (rec_layers + 1)


class OptimConfig(BaseModel):
    """AdamW settings and the training schedule."""

    lr: float = Field(
        default=1e-3, gt=0.0, description="Learning rate for all but the point encoder"
    )
    lr_visual: float = Field(default=1e-3, gt=0.0, description="Learning rate of the point encoder")
    weight_decay: float = Field(default=1e-4, ge=0.0, description="Decoupled weight decay")
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0, description="First-moment decay")
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0, description="Second-moment decay")
    eps: float = Field(default=1e-8, gt=0.0, description="Adam denominator epsilon")
    batch_size: int = Field(default=8, ge=1, description="Samples per optimizer step")
    epochs: int = Field(default=60, ge=1, description="Training epochs")


class AblationFlags(BaseModel):
    """Switches for the ablation axes and the open-question variants."""

    asa: Switch = Field(default="on", description="Adaptive alignment and confidence fusion")
    rsa: Switch = Field(
        default="on", description="Relative-position encoding (off: frozen zero MLP)"
    )
    align_target: Literal["mask", "box"] = Field(
        default="mask", description="Alignment target: query mask or in-box superpoints"
    )
    fusion: Literal["plus", "mul"] = Field(default="plus", description="Relative-encoding fusion")
    adaptive_losses: Literal["on", "off", "point", "mask"] = Field(
        default="on", description="Quality weights on the point term, the mask term, both or none"
    )
    mq_sigmoid: Switch = Field(
        default="on", description="Sigmoid before thresholding the query mask"
    )
    s0_source: Literal["text", "visual"] = Field(
        default="text", description="Initial mask-decoder queries: text or visual tokens"
    )
    freeze_text: Switch = Field(default="off", description="Exclude text embeddings from updates")


class DataPaths(BaseModel):
    """Dataset locations used by ``train``."""

    train: str | None = Field(default=None, description="Training JSONL file")
    val: str | None = Field(default=None, description="Validation JSONL file")


class RunConfig(BaseModel):
    """Everything that determines a training run."""

    preset: str = Field(default="desk", description="Preset the values were derived from")
    seed: int = Field(default=0, ge=0, description="Seed for initialisation and shuffling")
    dims: ModelDims = Field(default_factory=ModelDims)
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    rec_loss: RecLossWeights = Field(default_factory=RecLossWeights)
    asa: AsaConfig = Field(default_factory=AsaConfig)
    optim: OptimConfig = Field(default_factory=OptimConfig)
    ablation: AblationFlags = Field(default_factory=AblationFlags)
    paths: DataPaths = Field(default_factory=DataPaths)

    @field_validator("preset")
    @classmethod
    def _lower(cls, value: str) -> str:
        return value.lower()

    @property
    def gamma1(self) -> float:
        return self.asa.gamma1(self.dims.rec_layers)

    def with_flags(self, **flags: str) -> "RunConfig":
        """Copy with some ablation flags replaced (validated)."""
        merged = {**self.ablation.model_dump(), **flags}
        return self.model_copy(update={"ablation": AblationFlags.model_validate(merged)})

    def with_seed(self, seed: int) -> "RunConfig":
        return self.model_copy(update={"seed": seed})
