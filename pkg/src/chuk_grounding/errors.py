"""
Exception hierarchy for the grounding pipeline.

Input-validation failures also subclass ValueError so callers can keep
catching the builtin.
"""

from typing import Any


class GroundingError(Exception):
    """Base class for every error raised by chuk_grounding."""


class DimensionError(GroundingError, ValueError):
    """Operand shapes do not agree."""


class PreconditionError(GroundingError, ValueError):
    """An operation was called with inputs outside its domain."""


class VocabularyError(GroundingError, ValueError):
    """Unknown token id or token name."""


class DataConsistencyError(GroundingError, ValueError):
    """Indices or ids that should refer to the same cloud do not."""


class ConfigError(GroundingError, ValueError):
    """Invalid configuration line, value, or incompatible checkpoint."""


class ExpressionError(GroundingError, ValueError):
    """No uniquely identifying referring expression exists for a target."""


class DatasetFormatError(GroundingError, ValueError):
    """A dataset record could not be parsed."""

    def __init__(self, line: int, message: str) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnsupportedVersionError(GroundingError, ValueError):
    """A file declares a format version this build cannot read."""


class EmptyEvaluationError(GroundingError, ValueError):
    """A metric was requested over zero records."""


class NonFiniteGradientError(GroundingError, ArithmeticError):
    """A parameter gradient contains NaN or Inf; the optimizer step was aborted."""

    def __init__(self, parameter: str) -> None:
        self.parameter = parameter
        super().__init__(f"non-finite gradient in parameter '{parameter}'")


class NonFiniteLossError(GroundingError, ArithmeticError):
    """The training loss of a sample is NaN or Inf."""

    def __init__(self, sample_id: str, components: dict[str, Any]) -> None:
        self.sample_id = sample_id
        self.components = components
        super().__init__(f"non-finite loss on sample '{sample_id}': {components}")
