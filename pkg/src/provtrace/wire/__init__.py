"""Capture event schema, batch wire format, and the diskful append log."""

from provtrace.wire.events import CaptureConfig, CaptureEvent, EventBatch, EventKind, SpecRef, new_event_id
from provtrace.wire.codec import BatchValidationError, ParseError, decode_batch, decode_ndjson, encode_batch, encode_event
from provtrace.wire.eventlog import EventLogWriter, ReplayResult, replay_log

__all__ = [
    "BatchValidationError",
    "CaptureConfig",
    "CaptureEvent",
    "EventBatch",
    "EventKind",
    "EventLogWriter",
    "ParseError",
    "ReplayResult",
    "SpecRef",
    "decode_batch",
    "decode_ndjson",
    "encode_batch",
    "encode_event",
    "new_event_id",
    "replay_log",
]
