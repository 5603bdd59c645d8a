"""
Domain Exceptions — typed error hierarchy for the recommender.

Each layer has its own exception type so the CLI can map failures to exit
codes (usage/validation vs. numerical) and use cases can wrap adapter
failures without losing the original cause.
"""

from __future__ import annotations


class VitaError(Exception):
    """Base exception for all vita-rx errors."""

    def __init__(self, message: str, stage: str = "", cause: Exception | None = None):
        self.stage = stage
        self.cause = cause
        super().__init__(message)


class ConfigurationError(VitaError):
    """Raised when a config file or flag combination is invalid."""

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message, stage="configuration", cause=cause)


class DatasetError(VitaError):
    """Raised when a dataset directory is malformed or violates the vocabulary."""

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message, stage="dataset", cause=cause)


class ShapeError(VitaError):
    """Raised when tensor shapes do not line up for a primitive."""

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message, stage="tensor", cause=cause)


class NumericalError(VitaError):
    """Raised on non-finite losses, gradients or function values."""

    def __init__(
        self,
        message: str,
        cause: Exception | None = None,
        *,
        epoch: int | None = None,
        patient_id: str | None = None,
    ):
        self.epoch = epoch
        self.patient_id = patient_id
        super().__init__(message, stage="numerics", cause=cause)


class CheckpointError(VitaError):
    """Raised when a checkpoint cannot be written, read or validated."""

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message, stage="checkpoint", cause=cause)


class EvaluationError(VitaError):
    """Raised when an evaluation or analysis cannot be carried out."""

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message, stage="evaluation", cause=cause)


class ExperimentError(VitaError):
    """Raised when an experiment harness run is misconfigured or fails."""

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message, stage="experiment", cause=cause)
