"""Retrospective side of the vocabulary: what actually executed.

Timestamps are UTC microseconds since the epoch. Attribute payloads are
either a scalar literal, a reference into an external data store, or a
list of scalar literals; numeric literals must be finite and integral
floats collapse to ints so equal numbers intern to one term downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional, Union

from provtrace.core.prospective import DataStoreSpec, MlRole, Stage, StoreKind

Scalar = Union[int, float, str, bool]


class TaskStatus(str, Enum):
    RUNNING = "running"
    FINISHED = "finished"
    ERRORED = "errored"


@dataclass(frozen=True)
class Reference:
    """A locator into an external data store, tracked instead of copied."""

    store_id: str
    locator: str


Payload = Union[Scalar, Reference, tuple]


def canon_literal(value: Scalar) -> Scalar:
    """Normalize a scalar literal: reject non-finite numbers, collapse integral floats."""
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite literal {value!r}")
        return int(value) if value.is_integer() else value
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        return value
    raise TypeError(f"unsupported literal type {type(value).__name__}")


def canon_payload(payload) -> Payload:
    """Normalize a payload; accepts scalars, Reference, {'store_id','locator'}, or scalar lists."""
    if isinstance(payload, Reference):
        if not payload.store_id or not payload.locator:
            raise ValueError("reference payload needs non-empty store_id and locator")
        return payload
    if isinstance(payload, dict):
        if set(payload) != {"store_id", "locator"}:
            raise ValueError(f"reference object must have exactly store_id and locator, got {sorted(payload)}")
        return canon_payload(Reference(payload["store_id"], payload["locator"]))
    if isinstance(payload, (list, tuple)):
        return tuple(canon_literal(v) for v in payload)
    return canon_literal(payload)


def payload_to_obj(payload: Payload):
    if isinstance(payload, Reference):
        return {"store_id": payload.store_id, "locator": payload.locator}
    if isinstance(payload, tuple):
        return list(payload)
    return payload


def ts_to_iso(ts_us: int) -> str:
    """UTC microseconds -> ISO-8601 with Z suffix (lexicographic order is time order)."""
    dt = datetime.fromtimestamp(ts_us / 1_000_000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"


def iso_to_ts(text: str) -> int:
    dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)
    return int(round(dt.timestamp() * 1_000_000))


def now_us() -> int:
    return int(datetime.now(tz=timezone.utc).timestamp() * 1_000_000)


@dataclass(frozen=True)
class ExecutionMeta:
    hostname: str
    node_names: tuple[str, ...] = ()
    job_id: Optional[str] = None
    agent: str = ""

    def __post_init__(self):
        if not self.hostname:
            raise ValueError("hostname must be non-empty")

    def to_obj(self) -> dict:
        return {
            "hostname": self.hostname,
            "node_names": list(self.node_names),
            "job_id": self.job_id,
            "agent": self.agent,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ExecutionMeta":
        return cls(
            hostname=obj["hostname"],
            node_names=tuple(obj.get("node_names") or ()),
            job_id=obj.get("job_id"),
            agent=obj.get("agent", ""),
        )


@dataclass(frozen=True)
class TaskExecution:
    uri: str
    workflow_exec_id: str
    transformation_name: str
    start_time: Optional[int]
    end_time: Optional[int]
    status: TaskStatus
    execution_meta: ExecutionMeta
    stage: Optional[Stage] = None

    def __post_init__(self):
        if self.status is not TaskStatus.RUNNING and self.start_time is not None and self.end_time is not None:
            if self.end_time < self.start_time:
                raise ValueError("end_time precedes start_time")

    def duration_s(self) -> Optional[float]:
        if self.start_time is None or self.end_time is None:
            return None
        return (self.end_time - self.start_time) / 1_000_000

    def to_obj(self) -> dict:
        return {
            "uri": self.uri,
            "workflow_exec_id": self.workflow_exec_id,
            "transformation_name": self.transformation_name,
            "start_time": self.start_time,
            "end_time": self.end_time,
            "status": self.status.value,
            "execution_meta": self.execution_meta.to_obj(),
            "stage": self.stage.value if self.stage else None,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TaskExecution":
        return cls(
            uri=obj["uri"],
            workflow_exec_id=obj["workflow_exec_id"],
            transformation_name=obj["transformation_name"],
            start_time=obj.get("start_time"),
            end_time=obj.get("end_time"),
            status=TaskStatus(obj["status"]),
            execution_meta=ExecutionMeta.from_obj(obj["execution_meta"]),
            stage=Stage(obj["stage"]) if obj.get("stage") else None,
        )


class Direction(str, Enum):
    CONSUMED = "consumed"
    GENERATED = "generated"


@dataclass(frozen=True)
class DataValue:
    uri: str
    attribute_name: str
    payload: Payload
    role: Direction
    ml_role: MlRole = MlRole.PLAIN

    def to_obj(self) -> dict:
        return {
            "uri": self.uri,
            "attribute_name": self.attribute_name,
            "payload": payload_to_obj(self.payload),
            "role": self.role.value,
            "ml_role": self.ml_role.value,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "DataValue":
        return cls(
            uri=obj["uri"],
            attribute_name=obj["attribute_name"],
            payload=canon_payload(obj["payload"]),
            role=Direction(obj["role"]),
            ml_role=MlRole(obj.get("ml_role", "plain")),
        )


@dataclass(frozen=True)
class ProvRecord:
    """One resolved task execution with its values, derivations, and store edges.

    spec_key identifies the prospective spec the record was resolved under,
    so the manager can emit the prospective link without a registry of its own.
    """

    task: TaskExecution
    consumed: tuple[DataValue, ...] = ()
    generated: tuple[DataValue, ...] = ()
    derivations: tuple[tuple[str, str], ...] = ()  # (value uri, derived-from uri)
    store_edges: tuple[tuple[str, str], ...] = ()  # (value uri, store uri)
    stores: tuple[DataStoreSpec, ...] = ()  # descriptors for stores this record touches
    spec_key: Optional[tuple[str, str]] = None  # (workflow_name, version)

    def to_obj(self) -> dict:
        return {
            "task": self.task.to_obj(),
            "consumed": [v.to_obj() for v in self.consumed],
            "generated": [v.to_obj() for v in self.generated],
            "derivations": [list(d) for d in self.derivations],
            "store_edges": [list(e) for e in self.store_edges],
            "stores": [
                {"store_id": s.store_id, "store_kind": s.store_kind.value, "location": s.location}
                for s in self.stores
            ],
            "spec_ref": (
                {"workflow_name": self.spec_key[0], "version": self.spec_key[1]} if self.spec_key else None
            ),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ProvRecord":
        spec_ref = obj.get("spec_ref")
        return cls(
            task=TaskExecution.from_obj(obj["task"]),
            consumed=tuple(DataValue.from_obj(v) for v in obj.get("consumed", [])),
            generated=tuple(DataValue.from_obj(v) for v in obj.get("generated", [])),
            derivations=tuple((d[0], d[1]) for d in obj.get("derivations", [])),
            store_edges=tuple((e[0], e[1]) for e in obj.get("store_edges", [])),
            stores=tuple(
                DataStoreSpec(s["store_id"], StoreKind(s["store_kind"]), s["location"])
                for s in obj.get("stores", [])
            ),
            spec_key=(spec_ref["workflow_name"], spec_ref["version"]) if spec_ref else None,
        )


@dataclass(frozen=True)
class ModelRecord:
    """Query-side view of one trained model and how it came to be."""

    model_uri: str
    file_reference: Optional[Reference]
    hyperparameters: dict[str, Scalar] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)
    produced_by: Optional[str] = None

    def __post_init__(self):
        for name, value in self.metrics.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"metric {name!r} must be a finite number, got {value!r}")
