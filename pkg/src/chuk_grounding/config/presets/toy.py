"""
Toy preset - tiny widths for gradient checks and smoke tests.

Two heads and two layers per decoder so that head splitting, layer stacking
and per-layer loss averaging are all exercised.
"""

from chuk_grounding.config.base import GeometryConfig, ModelDims, OptimConfig, RunConfig

TOY_CONFIG = RunConfig(
    preset="toy",
    dims=ModelDims(
        d=4,
        n_points=64,
        max_tokens=5,
        queries=2,
        encoder_layers=1,
        rec_layers=2,
        res_layers=2,
        heads=2,
        ffn_mult=1,
    ),
    geometry=GeometryConfig(cell=0.25, ball_k=2, ball_radius=0.2),
    optim=OptimConfig(lr=5e-3, lr_visual=5e-3, batch_size=4, epochs=2),
)
