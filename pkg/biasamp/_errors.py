from __future__ import annotations

from typing import Optional

__all__ = (
    "ConfigurationError",
    "FormatError",
    "MetricError",
    "ShapeError",
    "TrainingDivergedError",
    "UnsupportedOperationError",
)


class ConfigurationError(ValueError):
    """
    A configuration value violates its documented domain.
    """


class UnsupportedOperationError(ConfigurationError):
    """
    The requested operation does not apply to the given configuration.
    """


class FormatError(ValueError):
    """
    A binary input does not match its declared format.

    Parameters
    ----------
    message
        What was wrong.
    offset
        The byte offset at which decoding failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ShapeError(ValueError):
    """
    Arrays that must agree in shape do not.
    """


class MetricError(ValueError):
    """
    A metric is undefined for the given records.

    Parameters
    ----------
    message
        What was wrong.
    group
        The group (if any) that made the metric undefined.
    """

    def __init__(self, message: str, group: Optional[object] = None):
        super().__init__(message)
        self.group = group


class TrainingDivergedError(RuntimeError):
    """
    Training produced a non-finite loss or gradient.

    Parameters
    ----------
    message
        A diagnostic.
    epoch
        The 1-based epoch in which training diverged.
    """

    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch
