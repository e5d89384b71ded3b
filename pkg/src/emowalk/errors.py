"""Exception and warning types shared across the pipeline."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PipelineError):
    """Raised when input files or rows cannot be interpreted."""


class MalformedRow(DataError):
    """A delimited-text row failed parsing or validation."""

    def __init__(self, line_no: int, reason: str, source: str = ""):
        self.line_no = line_no
        self.reason = reason
        self.source = source
        where = f"{source}:{line_no}" if source else f"line {line_no}"
        super().__init__(f"{where}: {reason}")


class UnknownConditionCode(DataError):
    """A condition code did not decode to a stimulus and emotion order."""


class InvalidConfig(PipelineError):
    """A configuration value is out of range or inconsistent."""


class InvalidSpec(InvalidConfig):
    """A SynthSpec parameter is out of range or inconsistent."""


class DegenerateWindow(PipelineError):
    """A window is too short or otherwise unusable for feature extraction."""


class EmptyDataset(PipelineError):
    """A fit was attempted on zero rows."""


class SingleClassDataset(PipelineError):
    """A fit that needs at least two classes saw only one."""


class DimensionMismatch(PipelineError):
    """Prediction input width does not match the fitted model."""


class EmptySpace(InvalidConfig):
    """A hyperparameter search space has no candidates for some field."""


class TooFewPerClass(PipelineError):
    """Stratified folding needs at least k members of every class."""


class LengthMismatch(PipelineError):
    """Two paired sequences differ in length."""


class EmptyInput(PipelineError):
    """A metric was called on empty inputs."""


class SingleClassTruth(PipelineError):
    """ROC AUC is undefined when the truth labels hold a single class."""


class TooFewPairs(PipelineError):
    """The paired significance test needs at least five pairs."""


class TooFewUsers(PipelineError):
    """A study summary needs at least two users per condition."""


class EmptyWalkWarning(UserWarning):
    """A declared walk interval matched no samples; the run continues."""
