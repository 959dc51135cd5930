"""Tracker: turns capture events into resolved provenance records.

Begin/end events are matched per (workflow execution, task_seq); attribute
values get deterministic global URIs; reference payloads are joined through
the reference index to stitch cross-workflow derivations; resolved records
queue up and are forwarded to the manager in groups.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import requests

from provtrace.core.prospective import DataStoreSpec, MlRole, ProspectiveSpec, parse_spec_obj, spec_to_obj, validate_spec
from provtrace.core.retrospective import (
    DataValue,
    Direction,
    ExecutionMeta,
    ProvRecord,
    Reference,
    TaskExecution,
    TaskStatus,
    now_us,
)
from provtrace.core.uris import make_uri, store_uri
from provtrace.core.prospective import derive_stage
from provtrace.tracker.locators import normalize_locator
from provtrace.tracker.state import StateJournal
from provtrace.wire.events import CaptureEvent, EventBatch, EventKind


class SpecConflict(ValueError):
    """Same {workflow_name, version} registered with different content."""


class IngestError(ValueError):
    def __init__(self, kind: str, detail: str, indices: Optional[list[int]] = None):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.indices = indices or []


@dataclass(frozen=True)
class IngestAck:
    accepted: int
    duplicates: int


@dataclass
class TrackerConfig:
    namespace: str = "pl"
    manager_endpoint: Optional[str] = None
    group_size: int = 50
    flush_interval_s: float = 1.0
    parked_timeout_s: float = 60.0
    state_path: Optional[str] = None
    retry_backoff_s: float = 0.2
    retry_attempts: int = 5


def _spec_digest(spec: ProspectiveSpec) -> str:
    blob = json.dumps(spec_to_obj(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class TrackerCore:
    def __init__(self, config: Optional[TrackerConfig] = None):
        self.config = config or TrackerConfig()
        self._lock = threading.RLock()
        self._specs: dict[tuple[str, str], tuple[ProspectiveSpec, str]] = {}
        self._bindings: dict[str, tuple[tuple[str, str], ExecutionMeta]] = {}
        self._ref_index: dict[tuple[str, str], str] = {}
        self._seen_events: set[str] = set()
        self._pending: dict[tuple[str, int], CaptureEvent] = {}
        self._parked: dict[tuple[str, int], tuple[CaptureEvent, float]] = {}
        self._forward_queue: deque[ProvRecord] = deque()
        self._queue_cond = threading.Condition(self._lock)
        self._journal = StateJournal(self.config.state_path)
        self._stop = threading.Event()
        self._session = requests.Session()
        self._forwarder: Optional[threading.Thread] = None

        self.records_resolved = 0
        self.records_forwarded = 0
        self.dedup_count = 0
        self.events_ingested = 0
        self.forward_retries = 0
        self.forward_blocked_s = 0.0
        self.last_skew_s = 0.0

        self._load_state()
        if self.config.manager_endpoint:
            self._forwarder = threading.Thread(target=self._forward_loop, name="prov-forwarder", daemon=True)
            self._forwarder.start()

    # -- registration ---------------------------------------------------------

    def register_spec(self, spec: ProspectiveSpec) -> tuple[str, str]:
        violations = validate_spec(spec)
        if violations:
            raise IngestError("invalid-spec", "; ".join(str(v) for v in violations))
        digest = _spec_digest(spec)
        with self._lock:
            existing = self._specs.get(spec.key)
            if existing:
                if existing[1] != digest:
                    raise SpecConflict(f"spec {spec.key} already registered with different content")
                return spec.key
            self._specs[spec.key] = (spec, digest)
            self._journal.append({"spec": spec_to_obj(spec)})
            return spec.key

    def bind_exec(self, workflow_name: str, version: str, workflow_exec_id: str, meta: Optional[ExecutionMeta] = None) -> None:
        with self._lock:
            key = (workflow_name, version)
            if key not in self._specs:
                raise IngestError("unknown-spec", f"no spec registered for {key}")
            meta = meta or ExecutionMeta(hostname="unknown", agent="")
            existing = self._bindings.get(workflow_exec_id)
            if existing and existing[0] != key:
                raise IngestError("exec-conflict", f"{workflow_exec_id} already bound to {existing[0]}")
            self._bindings[workflow_exec_id] = (key, meta)
            self._journal.append(
                {"bind": {"exec": workflow_exec_id, "workflow_name": workflow_name, "version": version, "meta": meta.to_obj()}}
            )

    # -- state ----------------------------------------------------------------

    def _load_state(self) -> None:
        for entry in self._journal.load():
            if "spec" in entry:
                spec = parse_spec_obj(entry["spec"])
                self._specs[spec.key] = (spec, _spec_digest(spec))
            elif "bind" in entry:
                b = entry["bind"]
                self._bindings[b["exec"]] = ((b["workflow_name"], b["version"]), ExecutionMeta.from_obj(b["meta"]))
            elif "ref" in entry:
                store_id, norm, uri = entry["ref"]
                self._ref_index[(store_id, norm)] = uri

    def _compact_state(self) -> None:
        with self._lock:
            entries: list[dict] = []
            for spec, _ in self._specs.values():
                entries.append({"spec": spec_to_obj(spec)})
            for exec_id, (key, meta) in self._bindings.items():
                entries.append({"bind": {"exec": exec_id, "workflow_name": key[0], "version": key[1], "meta": meta.to_obj()}})
            for (store_id, norm), uri in self._ref_index.items():
                entries.append({"ref": [store_id, norm, uri]})
            self._journal.compact(entries)

    # -- ingest ---------------------------------------------------------------

    def ingest(self, batch: EventBatch) -> IngestAck:
        with self._lock:
            key = (batch.spec_ref.workflow_name, batch.spec_ref.version)
            spec_entry = self._specs.get(key)
            if spec_entry is None:
                raise IngestError("unknown-spec", f"batch references unregistered spec {key}")
            spec = spec_entry[0]
            bad: list[int] = []
            for i, ev in enumerate(batch.events):
                binding = self._bindings.get(ev.workflow_exec_id)
                if binding is None:
                    raise IngestError("unbound-exec", f"workflow_exec_id {ev.workflow_exec_id!r} not bound")
                if binding[0] != key:
                    raise IngestError("exec-conflict", f"exec {ev.workflow_exec_id!r} is bound to {binding[0]}, not {key}")
                if spec.transformation(ev.transformation_name) is None:
                    bad.append(i)
            if bad:
                raise IngestError("malformed-events", "unknown transformation_name", indices=bad)

            accepted = duplicates = 0
            for ev in batch.events:
                if ev.event_id in self._seen_events:
                    duplicates += 1
                    self.dedup_count += 1
                    continue
                self._seen_events.add(ev.event_id)
                accepted += 1
                self.events_ingested += 1
                self._apply_event(ev, spec)
            if batch.events:
                self.last_skew_s = max(0.0, (now_us() - batch.events[-1].timestamp) / 1e6)
            return IngestAck(accepted=accepted, duplicates=duplicates)

    def _apply_event(self, ev: CaptureEvent, spec: ProspectiveSpec) -> None:
        key = (ev.workflow_exec_id, ev.task_seq)
        if ev.kind is EventKind.TASK_BEGIN:
            parked = self._parked.pop(key, None)
            if parked is not None:
                self._resolve_and_queue(ev, parked[0], spec)
            elif key in self._pending:
                # duplicate begin with a fresh event_id: keep the first, drop this one
                pass
            else:
                self._pending[key] = ev
        else:
            begin = self._pending.pop(key, None)
            if begin is not None:
                self._resolve_and_queue(begin, ev, spec)
            else:
                self._parked[key] = (ev, time.monotonic() + self.config.parked_timeout_s)

    def sweep_parked(self) -> int:
        """Resolve parked ends whose begin never arrived within the timeout."""
        now = time.monotonic()
        resolved = 0
        with self._lock:
            expired = [k for k, (_, deadline) in self._parked.items() if deadline <= now]
            for key in expired:
                end, _ = self._parked.pop(key)
                binding = self._bindings.get(end.workflow_exec_id)
                if binding is None:
                    continue
                spec = self._specs[binding[0]][0]
                self._resolve_and_queue(None, end, spec)
                resolved += 1
        return resolved

    # -- resolution -----------------------------------------------------------

    def _resolve_and_queue(self, begin: Optional[CaptureEvent], end: CaptureEvent, spec: ProspectiveSpec) -> None:
        record = self.resolve_record(begin, end, spec)
        self.records_resolved += 1
        self._forward_queue.append(record)
        self._queue_cond.notify_all()

    def resolve_record(self, begin: Optional[CaptureEvent], end: CaptureEvent, spec: ProspectiveSpec) -> ProvRecord:
        """Total once begin/end are matched; begin=None marks a timed-out end."""
        ns = self.config.namespace
        exec_id = end.workflow_exec_id
        tf = spec.transformation(end.transformation_name)
        binding = self._bindings.get(exec_id)
        meta = binding[1] if binding else ExecutionMeta(hostname="unknown", agent="")
        task_uri = make_uri(ns, exec_id, end.task_seq)

        consumed: list[DataValue] = []
        generated: list[DataValue] = []
        derivations: list[tuple[str, str]] = []
        store_edges: list[tuple[str, str]] = []
        stores_used: dict[str, DataStoreSpec] = {}
        occurrence: dict[str, int] = {}

        def process(attrs: dict, is_consumed: bool) -> None:
            for name, payload in attrs.items():
                occ = occurrence.get(name, 0)
                occurrence[name] = occ + 1
                uri = make_uri(ns, exec_id, end.task_seq, name, occ)
                attr = tf.attribute(name, output=not is_consumed) if tf else None
                role = attr.ml_role if attr else MlRole.PLAIN
                value = DataValue(
                    uri=uri,
                    attribute_name=name,
                    payload=payload,
                    role=Direction.CONSUMED if is_consumed else Direction.GENERATED,
                    ml_role=role,
                )
                (consumed if is_consumed else generated).append(value)
                if isinstance(payload, Reference):
                    st = spec.store(payload.store_id)
                    store_edges.append((uri, store_uri(ns, payload.store_id)))
                    if st is not None:
                        stores_used[st.store_id] = st
                    norm = normalize_locator(st.store_kind if st else None, payload.locator)
                    ref_key = (payload.store_id, norm)
                    if is_consumed:
                        producer = self._ref_index.get(ref_key)
                        if producer is not None:
                            derivations.append((uri, producer))
                    else:
                        self._ref_index[ref_key] = uri
                        self._journal.append({"ref": [payload.store_id, norm, uri]})

        if begin is not None:
            process(begin.attributes, is_consumed=True)
        process(end.attributes, is_consumed=False)

        task = TaskExecution(
            uri=task_uri,
            workflow_exec_id=exec_id,
            transformation_name=end.transformation_name,
            start_time=begin.timestamp if begin else None,
            end_time=end.timestamp,
            status=TaskStatus.FINISHED if begin is not None else TaskStatus.ERRORED,
            execution_meta=meta,
            stage=derive_stage(tf) if tf else None,
        )
        return ProvRecord(
            task=task,
            consumed=tuple(consumed),
            generated=tuple(generated),
            derivations=tuple(derivations),
            store_edges=tuple(store_edges),
            stores=tuple(sorted(stores_used.values(), key=lambda s: s.store_id)),
            spec_key=spec.key,
        )

    # -- forwarding -----------------------------------------------------------

    def _take_group(self, timeout: float) -> list[ProvRecord]:
        deadline = time.monotonic() + timeout
        with self._queue_cond:
            while len(self._forward_queue) < self.config.group_size and not self._stop.is_set():
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                self._queue_cond.wait(remaining)
            group = []
            while self._forward_queue and len(group) < self.config.group_size:
                group.append(self._forward_queue.popleft())
            return group

    def _post_records(self, group: list[ProvRecord]) -> bool:
        body = [r.to_obj() for r in group]
        url = self.config.manager_endpoint.rstrip("/") + "/v1/records"
        backoff = self.config.retry_backoff_s
        for attempt in range(self.config.retry_attempts):
            try:
                resp = self._session.post(url, json=body, timeout=10)
                if resp.status_code == 200:
                    return True
            except requests.RequestException:
                pass
            self.forward_retries += 1
            t0 = time.monotonic()
            time.sleep(min(backoff, 5.0))
            self.forward_blocked_s += time.monotonic() - t0
            backoff *= 2
        return False

    def _forward_loop(self) -> None:
        while True:
            self.sweep_parked()
            group = self._take_group(self.config.flush_interval_s)
            if not group:
                if self._stop.is_set():
                    return
                continue
            while not self._post_records(group):
                if self._stop.is_set():
                    # put the unsent group back so queue depth reflects reality
                    with self._lock:
                        self._forward_queue.extendleft(reversed(group))
                    return
                t0 = time.monotonic()
                time.sleep(1.0)
                self.forward_blocked_s += time.monotonic() - t0
            self.records_forwarded += len(group)

    def flush(self, timeout: float = 30.0) -> bool:
        """Block until the forward queue drains (or timeout); True when empty."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if not self._forward_queue:
                    return True
            time.sleep(0.02)
        return False

    def close(self) -> None:
        self.sweep_parked()
        if self._forwarder:
            self.flush(timeout=10.0)
            self._stop.set()
            with self._queue_cond:
                self._queue_cond.notify_all()
            self._forwarder.join(timeout=10.0)
        self._compact_state()
        self._journal.close()
        self._session.close()

    # -- introspection ----------------------------------------------------------

    def ids_digest(self) -> str:
        with self._lock:
            blob = "\n".join(sorted(self._seen_events))
        return hashlib.sha256(blob.encode("ascii")).hexdigest()

    def metrics(self) -> dict:
        with self._lock:
            return {
                "forward_queue_depth": len(self._forward_queue),
                "pending_tasks": len(self._pending),
                "parked_tasks": len(self._parked),
                "dedup_count": self.dedup_count,
                "events_ingested": self.events_ingested,
                "records_resolved": self.records_resolved,
                "records_forwarded": self.records_forwarded,
                "forward_retries": self.forward_retries,
                "forward_blocked_s": round(self.forward_blocked_s, 6),
                "last_skew_s": round(self.last_skew_s, 6),
                "ingested_ids_digest": self.ids_digest(),
            }
