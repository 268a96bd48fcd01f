"""Shared constants, configuration models, errors and progress events."""

from .errors import SubrefineError
from .events import (
    CellCompletedEvent,
    CellStartedEvent,
    CompleteEvent,
    EpochCompletedEvent,
    ErrorEvent,
    EventType,
    IterationCompletedEvent,
    IterationStartedEvent,
    ProgressEvent,
)

__all__ = [
    "SubrefineError",
    # Events
    "ProgressEvent",
    "EventType",
    "EpochCompletedEvent",
    "IterationStartedEvent",
    "IterationCompletedEvent",
    "CellStartedEvent",
    "CellCompletedEvent",
    "ErrorEvent",
    "CompleteEvent",
]
