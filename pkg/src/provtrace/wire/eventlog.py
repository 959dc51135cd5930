"""Diskful append log: one canonical JSON event per line, single writer per file.

A crashed writer leaves at most one truncated final line; replay recovers
every complete line in append order and reports the truncation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from provtrace.wire.codec import ParseError, encode_event
from provtrace.wire.events import CaptureEvent


class EventLogWriter:
    """Append-only sink; not safe for concurrent writers on one path."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "ab")
        self.appended = 0
        self.dropped = 0  # appends lost to I/O failure (diskful is best-effort backup)

    def append(self, event: CaptureEvent) -> bool:
        try:
            self._fh.write(encode_event(event) + b"\n")
            self.appended += 1
            return True
        except OSError:
            self.dropped += 1
            return False

    def flush(self) -> None:
        try:
            self._fh.flush()
        except OSError:
            pass

    def close(self) -> None:
        try:
            self._fh.flush()
            self._fh.close()
        except OSError:
            pass


@dataclass
class ReplayResult:
    events: list[CaptureEvent] = field(default_factory=list)
    truncated_tail: bool = False

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)


def replay_log(path: Union[str, Path]) -> ReplayResult:
    """Read a log back in file order.

    Duplicate event_ids are preserved (the tracker deduplicates). Only a
    truncated *final* line is skipped; garbage earlier in the file means the
    file was not produced by this writer and raises ParseError.
    """
    raw = Path(path).read_bytes()
    result = ReplayResult()
    if not raw:
        return result
    lines = raw.split(b"\n")
    tail = lines[-1]
    for i, line in enumerate(lines[:-1]):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            result.events.append(CaptureEvent.from_obj(obj))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"corrupt log line {i}: {exc}") from exc
    if tail.strip():
        try:
            result.events.append(CaptureEvent.from_obj(json.loads(tail)))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError):
            result.truncated_tail = True
    return result
