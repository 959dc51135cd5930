"""Canonical JSON codec for batches and events.

The canonical form is a single line: object keys sorted, no insignificant
whitespace, UTF-8. Equal values therefore encode to identical bytes, and
the encoding is injective on batch values. Decoding accepts any key order
but always re-checks the batch invariants.
"""

from __future__ import annotations

import json
from typing import Union

from provtrace.wire.events import WIRE_VERSION, CaptureEvent, EventBatch, EventKind, SpecRef


class ParseError(ValueError):
    """Malformed bytes; ``offset`` is the byte position where parsing failed."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class BatchValidationError(ValueError):
    """Structurally valid JSON that breaks a batch invariant; ``rule`` names it."""

    def __init__(self, rule: str, detail: str):
        super().__init__(f"{rule}: {detail}")
        self.rule = rule


def _dumps(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def encode_event(event: CaptureEvent) -> bytes:
    return _dumps(event.to_obj())


def encode_batch(batch: EventBatch) -> bytes:
    obj = {
        "v": WIRE_VERSION,
        "client_id": batch.client_id,
        "spec_ref": {"workflow_name": batch.spec_ref.workflow_name, "version": batch.spec_ref.version},
        "events": [e.to_obj() for e in batch.events],
    }
    return _dumps(obj)


def validate_batch(batch: EventBatch) -> None:
    """Enforce batch invariants; raises BatchValidationError naming the broken rule."""
    if not batch.events:
        raise BatchValidationError("non-empty", "batch has no events")
    seen_ids: set[str] = set()
    ended: set[tuple[str, int]] = set()
    last_seq = None
    for ev in batch.events:
        if ev.client_id != batch.client_id:
            raise BatchValidationError("client_id", f"event {ev.event_id} has client_id {ev.client_id!r}")
        if ev.event_id in seen_ids:
            raise BatchValidationError("event_id unique", f"event_id {ev.event_id} repeats")
        seen_ids.add(ev.event_id)
        if last_seq is not None and ev.seq_no <= last_seq:
            raise BatchValidationError("seq_no order", f"seq_no {ev.seq_no} after {last_seq}")
        last_seq = ev.seq_no
        key = (ev.workflow_exec_id, ev.task_seq)
        if ev.kind is EventKind.TASK_END:
            ended.add(key)
        elif key in ended:
            raise BatchValidationError("begin-before-end", f"task_begin for task {ev.task_seq} after its task_end")


def _decode_obj(obj: dict) -> EventBatch:
    if not isinstance(obj, dict):
        raise BatchValidationError("shape", "batch must be a JSON object")
    for key in ("client_id", "spec_ref", "events"):
        if key not in obj:
            raise BatchValidationError("shape", f"missing key {key!r}")
    if obj.get("v", WIRE_VERSION) != WIRE_VERSION:
        raise BatchValidationError("version", f"unsupported wire version {obj.get('v')!r}")
    spec_ref = obj["spec_ref"]
    if not isinstance(spec_ref, dict) or "workflow_name" not in spec_ref or "version" not in spec_ref:
        raise BatchValidationError("shape", "spec_ref needs workflow_name and version")
    try:
        events = tuple(CaptureEvent.from_obj(e) for e in obj["events"])
    except (KeyError, ValueError, TypeError) as exc:
        raise BatchValidationError("event shape", str(exc)) from exc
    batch = EventBatch(
        client_id=obj["client_id"],
        spec_ref=SpecRef(spec_ref["workflow_name"], spec_ref["version"]),
        events=events,
    )
    validate_batch(batch)
    return batch


def decode_batch(data: Union[bytes, str]) -> EventBatch:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos) from exc
    return _decode_obj(obj)


def decode_ndjson(data: Union[bytes, str]) -> list[EventBatch]:
    """Decode newline-framed batches: one batch object per non-empty line."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    batches = []
    offset = 0
    for line in text.split("\n"):
        if line.strip():
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, offset + exc.pos) from exc
            batches.append(_decode_obj(obj))
        offset += len(line) + 1
    return batches
