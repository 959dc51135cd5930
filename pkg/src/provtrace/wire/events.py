"""Capture events and batches: the unit of traffic from workflows to the tracker."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from provtrace.core.retrospective import Payload, canon_payload, payload_to_obj

WIRE_VERSION = 1


class EventKind(str, Enum):
    TASK_BEGIN = "task_begin"
    TASK_END = "task_end"


# urandom-seeded once per process: id generation sits on the capture hot path,
# so it avoids a syscall per event; uniqueness, not secrecy, is the contract
_id_rng = random.Random()


def new_event_id(rng=None) -> str:
    """128-bit random identifier as 32 hex chars; the ingest idempotency key."""
    return f"{(rng or _id_rng).getrandbits(128):032x}"


@dataclass(frozen=True)
class CaptureEvent:
    event_id: str
    kind: EventKind
    client_id: str
    workflow_exec_id: str
    task_seq: int
    transformation_name: str
    attributes: dict[str, Payload]
    timestamp: int  # UTC microseconds
    seq_no: int

    def to_obj(self) -> dict:
        return {
            "event_id": self.event_id,
            "kind": self.kind.value,
            "client_id": self.client_id,
            "workflow_exec_id": self.workflow_exec_id,
            "task_seq": self.task_seq,
            "transformation_name": self.transformation_name,
            "attributes": {k: payload_to_obj(v) for k, v in self.attributes.items()},
            "timestamp": self.timestamp,
            "seq_no": self.seq_no,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "CaptureEvent":
        return cls(
            event_id=obj["event_id"],
            kind=EventKind(obj["kind"]),
            client_id=obj["client_id"],
            workflow_exec_id=obj["workflow_exec_id"],
            task_seq=obj["task_seq"],
            transformation_name=obj["transformation_name"],
            attributes={k: canon_payload(v) for k, v in obj["attributes"].items()},
            timestamp=obj["timestamp"],
            seq_no=obj["seq_no"],
        )


@dataclass(frozen=True)
class SpecRef:
    workflow_name: str
    version: str


@dataclass(frozen=True)
class EventBatch:
    client_id: str
    spec_ref: SpecRef
    events: tuple[CaptureEvent, ...]


@dataclass
class CaptureConfig:
    """Client-side capture settings; at least one of the two sinks must be on."""

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
            raise ValueError("at least one sink required: persist_to_disk or send_online")
        if self.persist_to_disk and not self.log_path:
            raise ValueError("log_path required when persist_to_disk is on")
        if not self.persist_to_disk and self.log_path:
            raise ValueError("log_path is only valid with persist_to_disk")
