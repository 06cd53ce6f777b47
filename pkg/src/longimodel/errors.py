"""Exception hierarchy shared across the platform.

Every error a caller is expected to handle derives from ``LongimodelError``;
the CLI maps these to exit code 1 and the HTTP layer maps them to 4xx/5xx.
"""

from __future__ import annotations


class LongimodelError(Exception):
    """Base class for all domain-level failures."""


class EncodingError(LongimodelError):
    """A value cannot be canonically encoded."""


class ConfigError(LongimodelError):
    """Invalid configuration or operation parameters."""


class MappingError(LongimodelError):
    """Unknown or unusable source mapping during normalization."""


class EmptyCohortError(LongimodelError):
    """No patient yielded an index date."""


class RegistrationError(LongimodelError):
    """A feature definition cannot be registered."""


class CycleError(RegistrationError):
    """Feature dependencies form a cycle."""


class NotFoundError(LongimodelError):
    """A referenced entity does not exist."""


class FeatureMissError(LongimodelError):
    """Requested feature values are not precomputed."""

    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        super().__init__(f"missing precomputed features: {', '.join(self.missing)}")


class DegenerateDataError(LongimodelError):
    """Training data contains a single class."""


class CalibrationError(LongimodelError):
    """Calibration cannot be fit."""


class MetricError(LongimodelError):
    """A metric is undefined for the given inputs."""


class TransitionError(LongimodelError):
    """A stage transition is not allowed."""


class NoModelError(NotFoundError):
    """No Production model exists for the task."""


class IntegrityError(LongimodelError):
    """A reference does not resolve (e.g. dangling provenance)."""


class CorruptionError(LongimodelError):
    """Stored content does not match its digest."""


class ServingError(LongimodelError):
    """A serving handle could not produce a score."""

    def __init__(self, message: str, retry_after_s: float | None = None):
        self.retry_after_s = retry_after_s
        super().__init__(message)


class SpecError(LongimodelError):
    """Model spec and inputs disagree (e.g. dimension mismatch)."""


class PipelineError(LongimodelError):
    """A training pipeline stage failed."""

    def __init__(self, stage: str, cause: Exception | str):
        self.stage = stage
        super().__init__(f"pipeline failed at stage '{stage}': {cause}")


class AuthError(LongimodelError):
    """Missing or invalid API key."""


class ProfileError(LongimodelError):
    """Reference profile missing or window below minimum."""
