"""Diskful sink: newline-delimited JSON events, one writer per file."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union


class EventLog:
    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "ab")
        self.dropped_writes = 0

    def append(self, event_obj: dict) -> bool:
        try:
            self._fh.write(json.dumps(event_obj, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n")
            return True
        except OSError:
            self.dropped_writes += 1
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


def replay_event_log(path: Union[str, Path]) -> list[dict]:
    """Complete event objects in append order; a torn final line is skipped."""
    raw = Path(path).read_bytes()
    if not raw:
        return []
    lines = raw.split(b"\n")
    out = []
    for line in lines[:-1]:
        if line.strip():
            out.append(json.loads(line))
    tail = lines[-1]
    if tail.strip():
        try:
            out.append(json.loads(tail))
        except json.JSONDecodeError:
            pass  # crash mid-write leaves at most this one torn line
    return out
