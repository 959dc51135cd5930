"""Durable tracker state: registered specs, execution bindings, reference index.

An append-only NDJSON journal replayed at startup, compacted to a snapshot
on clean shutdown. Without a state path the tracker runs memory-only.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union


class StateJournal:
    def __init__(self, path: Union[str, Path, None]):
        self._dir = Path(path) if path else None
        self._fh = None
        if self._dir:
            self._dir.mkdir(parents=True, exist_ok=True)

    def _journal_path(self) -> Path:
        return self._dir / "tracker_state.ndjson"

    def _snapshot_path(self) -> Path:
        return self._dir / "tracker_state.snapshot.json"

    def load(self) -> list[dict]:
        """All surviving entries: snapshot content first, then journal tail."""
        if not self._dir:
            return []
        entries: list[dict] = []
        snap = self._snapshot_path()
        if snap.exists():
            entries.extend(json.loads(snap.read_text(encoding="utf-8")))
        journal = self._journal_path()
        if journal.exists():
            for line in journal.read_bytes().split(b"\n"):
                if not line.strip():
                    continue
                try:
                    entries.append(json.loads(line))
                except json.JSONDecodeError:
                    break  # torn tail from a crash; everything before it is good
        return entries

    def append(self, entry: dict) -> None:
        if not self._dir:
            return
        if self._fh is None:
            self._fh = open(self._journal_path(), "ab")
        self._fh.write(json.dumps(entry, separators=(",", ":")).encode("utf-8") + b"\n")
        self._fh.flush()

    def compact(self, entries: list[dict]) -> None:
        if not self._dir:
            return
        tmp = self._snapshot_path().with_suffix(".tmp")
        tmp.write_text(json.dumps(entries), encoding="utf-8")
        tmp.replace(self._snapshot_path())
        if self._fh:
            self._fh.close()
            self._fh = None
        open(self._journal_path(), "wb").close()

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None
