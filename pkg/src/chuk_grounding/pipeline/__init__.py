"""
Pipeline package - training, checkpoints, evaluation, ablations and the
gradient-check suite.
"""

from chuk_grounding.pipeline.checkpoint import (
    CHECKPOINT_VERSION,
    Checkpoint,
    load_checkpoint,
    make_checkpoint,
    restore_model,
    restore_training,
    save_checkpoint,
    shuffle_rng,
)
from chuk_grounding.pipeline.evaluate import (
    check_compatible,
    evaluate,
    evaluate_model,
    evaluate_records,
    oracle_record,
    record_for,
)
from chuk_grounding.pipeline.train import VAL_KEYS, EpochLog, TrainResult, train, train_step
from chuk_grounding.pipeline.ablate import (
    AXES,
    MIN_SEEDS,
    AblationReport,
    AblationRun,
    ablate,
    get_axis,
    list_axes,
)
from chuk_grounding.pipeline.gradcheck_suite import (
    SuiteReport,
    full_loss_check,
    gradcheck_suite,
    loss_fn_checks,
    module_checks,
    op_checks,
    readout,
)

__all__ = [
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "load_checkpoint",
    "make_checkpoint",
    "restore_model",
    "restore_training",
    "save_checkpoint",
    "shuffle_rng",
    "check_compatible",
    "evaluate",
    "evaluate_model",
    "evaluate_records",
    "oracle_record",
    "record_for",
    "VAL_KEYS",
    "EpochLog",
    "TrainResult",
    "train",
    "train_step",
    "AXES",
    "MIN_SEEDS",
    "AblationReport",
    "AblationRun",
    "ablate",
    "get_axis",
    "list_axes",
    "SuiteReport",
    "full_loss_check",
    "gradcheck_suite",
    "loss_fn_checks",
    "module_checks",
    "op_checks",
    "readout",
]
