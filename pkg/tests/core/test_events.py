"""Tests for src/core/events.py - progress events."""

from src.core.events import (
    CellCompletedEvent,
    EpochCompletedEvent,
    ErrorEvent,
    EventType,
    IterationCompletedEvent,
    emit,
)


class TestEvents:
    """Tests for event types and emit."""

    def test_event_types_fixed(self):
        """Test each event class carries its own type."""
        assert EpochCompletedEvent(epoch=1).event_type is EventType.EPOCH_COMPLETED
        assert CellCompletedEvent(cell="sp").event_type is EventType.CELL_COMPLETED
        assert ErrorEvent(error_message="x").event_type is EventType.ERROR

    def test_timestamp_set(self):
        """Test events are timestamped on creation."""
        assert IterationCompletedEvent(iteration=1).timestamp > 0

    def test_emit_calls_callback(self):
        """Test emit forwards the event."""
        received = []
        event = EpochCompletedEvent(epoch=2, total_epochs=3, mean_loss=1.5)
        emit(received.append, event)
        assert received == [event]

    def test_emit_without_callback(self):
        """Test emit tolerates a missing callback."""
        emit(None, ErrorEvent(error_message="ignored"))
