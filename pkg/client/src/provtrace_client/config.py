"""Capture configuration with environment overrides.

PROVTRACE_ENDPOINT, PROVTRACE_QUEUE_SIZE, PROVTRACE_DISKFUL (log path; empty
disables), and PROVTRACE_ONLINE (0/1) override whatever the program passed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class CaptureConfig:
    queue_max_size: int = 50
    persist_to_disk: bool = False
    send_online: bool = True
    tracker_endpoint: str = "http://127.0.0.1:7461"
    log_path: Optional[str] = None
    flush_interval_s: float = 1.0

    def __post_init__(self):
        if self.queue_max_size < 1:
            raise ValueError("queue_max_size must be >= 1")
        if not (self.persist_to_disk or self.send_online):
            raise ValueError("enable at least one sink: persist_to_disk or send_online")
        if self.persist_to_disk and not self.log_path:
            raise ValueError("persist_to_disk needs log_path")
        if not self.persist_to_disk and self.log_path:
            raise ValueError("log_path given but persist_to_disk is off")


def config_from_env(base: Optional[CaptureConfig] = None) -> CaptureConfig:
    """Apply PROVTRACE_* environment overrides on top of a base config."""
    cfg = base or CaptureConfig()
    updates: dict = {}
    endpoint = os.environ.get("PROVTRACE_ENDPOINT")
    if endpoint:
        updates["tracker_endpoint"] = endpoint
    queue = os.environ.get("PROVTRACE_QUEUE_SIZE")
    if queue:
        updates["queue_max_size"] = int(queue)
    diskful = os.environ.get("PROVTRACE_DISKFUL")
    if diskful is not None:
        if diskful:
            updates["persist_to_disk"] = True
            updates["log_path"] = diskful
        else:
            updates["persist_to_disk"] = False
            updates["log_path"] = None
    online = os.environ.get("PROVTRACE_ONLINE")
    if online is not None and online != "":
        updates["send_online"] = online not in ("0", "false", "no")
    return replace(cfg, **updates) if updates else cfg
