"""
Numeric kernels package.

Tape-recorded forward/backward ops, MLPs, the parameter registry, AdamW and
finite-difference gradient checks.
"""

from chuk_grounding.numeric.tape import (
    MASKED,
    PROB_CLAMP,
    FloatArray,
    IntArray,
    Node,
    Param,
    Tape,
    as_matrix,
)
from chuk_grounding.numeric.params import ParamStore
from chuk_grounding.numeric.mlp import MlpParams, MlpSpec, init_mlp, mlp_forward
from chuk_grounding.numeric.optim import AdamW
from chuk_grounding.numeric.gradcheck import GradCheckReport, grad_check

__all__ = [
    "MASKED",
    "PROB_CLAMP",
    "FloatArray",
    "IntArray",
    "Node",
    "Param",
    "Tape",
    "as_matrix",
    "ParamStore",
    "MlpParams",
    "MlpSpec",
    "init_mlp",
    "mlp_forward",
    "AdamW",
    "GradCheckReport",
    "grad_check",
]
