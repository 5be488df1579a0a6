"""Paper-scale preset - full widths, six box decoder layers, split learning rates."""

from chuk_grounding.config.base import ModelDims, OptimConfig, RunConfig

PAPER_SCALE_CONFIG = RunConfig(
    preset="paper-scale",
    dims=ModelDims(
        d=288,
        n_points=1024,
        max_tokens=256,
        queries=256,
        encoder_layers=2,
        rec_layers=6,
        res_layers=2,
        heads=8,
        ffn_mult=2,
    ),
    optim=OptimConfig(lr=2e-4, lr_visual=2e-3, batch_size=12, epochs=60),
)
