"""Event types for streaming progress from training and refinement runs."""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional


class EventType(str, Enum):
    """Types of progress events emitted by the pipeline."""

    EPOCH_COMPLETED = "epoch_completed"
    ITERATION_STARTED = "iteration_started"
    ITERATION_COMPLETED = "iteration_completed"
    CELL_STARTED = "cell_started"
    CELL_COMPLETED = "cell_completed"
    ERROR = "error"
    COMPLETE = "complete"


@dataclass
class ProgressEvent:
    """Base class for all progress events."""

    event_type: EventType
    timestamp: float = field(default_factory=time.time)


@dataclass
class EpochCompletedEvent(ProgressEvent):
    """Emitted after each training epoch."""

    event_type: EventType = field(default=EventType.EPOCH_COMPLETED, init=False)
    epoch: int = 0
    total_epochs: int = 0
    mean_loss: float = 0.0


@dataclass
class IterationStartedEvent(ProgressEvent):
    """Emitted when a refinement iteration begins."""

    event_type: EventType = field(default=EventType.ITERATION_STARTED, init=False)
    iteration: int = 0
    total_iterations: int = 0


@dataclass
class IterationCompletedEvent(ProgressEvent):
    """Emitted when a refinement iteration has been persisted."""

    event_type: EventType = field(default=EventType.ITERATION_COMPLETED, init=False)
    iteration: int = 0
    total_iterations: int = 0
    wer: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)


@dataclass
class CellStartedEvent(ProgressEvent):
    """Emitted when an experiment grid cell starts."""

    event_type: EventType = field(default=EventType.CELL_STARTED, init=False)
    cell: str = ""
    cell_index: int = 0
    total_cells: int = 0


@dataclass
class CellCompletedEvent(ProgressEvent):
    """Emitted when an experiment grid cell finishes (or is resumed from disk)."""

    event_type: EventType = field(default=EventType.CELL_COMPLETED, init=False)
    cell: str = ""
    cell_index: int = 0
    total_cells: int = 0
    resumed: bool = False


@dataclass
class ErrorEvent(ProgressEvent):
    """Emitted when a stage fails."""

    event_type: EventType = field(default=EventType.ERROR, init=False)
    error_message: str = ""
    cell: Optional[str] = None
    recoverable: bool = False


@dataclass
class CompleteEvent(ProgressEvent):
    """Emitted when a run completes."""

    event_type: EventType = field(default=EventType.COMPLETE, init=False)
    result: dict[str, Any] = field(default_factory=dict)
    message: str = ""


EventCallback = Callable[[ProgressEvent], None]


def emit(callback: Optional[EventCallback], event: ProgressEvent) -> None:
    """Send an event to an optional callback."""
    if callback is not None:
        callback(event)
