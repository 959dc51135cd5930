"""The capture session: bounded queue, background flusher, two sinks.

The instrumented loop only ever pays for building an event and one queue
put; delivery happens on the flusher thread, which wakes when the queue
fills or the flush timer fires. When the queue is full the producer blocks
rather than dropping: lineage completeness wins over speed, and the time
spent blocked is counted so it stays attributable.
"""

from __future__ import annotations

import http.client
import json
import logging
import math
import queue
import threading
import time
import uuid
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional, Union
from urllib.parse import urlparse

from provtrace_client.config import CaptureConfig
from provtrace_client.log import EventLog
from provtrace_client.spec import SpecError, Transformation, WorkflowSpec, load_workflow_spec

logger = logging.getLogger("provtrace_client")


class SessionStartupError(RuntimeError):
    """The session could not be opened: bad spec or no usable sink."""


class CaptureError(RuntimeError):
    """Misuse of the capture API or undeliverable events at close."""


@dataclass
class TaskHandle:
    task_seq: int
    transformation_name: str
    begun_at: int
    closed: bool = False


@dataclass
class SessionCounters:
    emitted: int = 0
    posted: int = 0
    logged: int = 0
    lost: int = 0
    blocked_s: float = 0.0
    send_failures: int = 0
    unknown_attributes: int = 0


def reference(store_id: str, locator: str) -> dict:
    """Payload for a value that lives in an external data store."""
    return {"store_id": store_id, "locator": locator}


def _check_payload(value, where: str):
    if isinstance(value, bool) or isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise CaptureError(f"{where}: non-finite number {value!r}")
        return value
    if isinstance(value, dict):
        if set(value) != {"store_id", "locator"}:
            raise CaptureError(f"{where}: reference payloads need exactly store_id and locator")
        return value
    if isinstance(value, (list, tuple)):
        return [_check_payload(v, where) for v in value]
    raise CaptureError(f"{where}: unsupported payload type {type(value).__name__}")


class _TrackerClient:
    """Keep-alive JSON POSTs over http.client; lean enough for a hot loop's flusher."""

    def __init__(self, endpoint: str, timeout: float = 10.0):
        parsed = urlparse(endpoint)
        self._host = parsed.hostname or "127.0.0.1"
        self._port = parsed.port or 80
        self._timeout = timeout
        self._conn: Optional[http.client.HTTPConnection] = None

    def post(self, path: str, body: bytes) -> tuple[int, bytes]:
        if self._conn is None:
            self._conn = http.client.HTTPConnection(self._host, self._port, timeout=self._timeout)
        try:
            self._conn.request("POST", path, body=body, headers={"Content-Type": "application/json"})
            resp = self._conn.getresponse()
            return resp.status, resp.read()
        except (OSError, http.client.HTTPException):
            if self._conn is not None:
                self._conn.close()
                self._conn = None
            raise

    def close(self) -> None:
        if self._conn is not None:
            self._conn.close()
            self._conn = None


class ProvSession:
    """One workflow execution's capture stream. Thread-safe for producers."""

    def __init__(
        self,
        spec: WorkflowSpec,
        config: CaptureConfig,
        client_id: Optional[str] = None,
        workflow_exec_id: Optional[str] = None,
    ):
        self.spec = spec
        self.config = config
        self.workflow_exec_id = workflow_exec_id or str(uuid.uuid4())
        self.client_id = client_id or f"pl-{self.workflow_exec_id[:8]}"
        self.counters = SessionCounters()
        self.degraded = False

        self._queue: queue.Queue[dict] = queue.Queue(maxsize=config.queue_max_size)
        self._wake = threading.Event()
        self._closing = threading.Event()
        self._closed = False
        self._lock = threading.Lock()
        self._next_task_seq = 0
        self._next_seq_no = 0
        self._open_tasks: set[int] = set()

        self._log = EventLog(config.log_path) if config.persist_to_disk else None
        self._tracker = _TrackerClient(config.tracker_endpoint) if config.send_online else None
        self._online = config.send_online
        if self._online:
            self._handshake()
        self._flusher = threading.Thread(target=self._flush_loop, name="provtrace-flusher", daemon=True)
        self._flusher.start()

    # -- startup ---------------------------------------------------------------

    def _handshake(self) -> None:
        try:
            status, body = self._tracker.post(
                "/v1/spec", json.dumps(self.spec.raw, sort_keys=True).encode("utf-8")
            )
            if status == 409:
                raise SessionStartupError(f"spec conflict at tracker: {body[:300]!r}")
            if status not in (200, 201):
                raise SessionStartupError(f"spec registration failed ({status}): {body[:300]!r}")
            status, body = self._tracker.post(
                "/v1/workflow-exec",
                json.dumps(
                    {
                        "workflow_name": self.spec.workflow_name,
                        "version": self.spec.version,
                        "workflow_exec_id": self.workflow_exec_id,
                        "execution_meta": {"agent": self.client_id},
                    }
                ).encode("utf-8"),
            )
            if status != 200:
                raise SessionStartupError(f"workflow-exec binding failed ({status}): {body[:300]!r}")
        except OSError as exc:
            if self._log is not None:
                logger.warning(
                    "tracker unreachable (%s); running degraded, disk log only — online queries will not see this run",
                    exc,
                )
                self.degraded = True
                self._online = False
            else:
                raise SessionStartupError(f"tracker unreachable and no disk log configured: {exc}") from exc

    # -- capture API -------------------------------------------------------------

    def prov_in(self, transformation_name: str, inputs: Optional[dict] = None) -> TaskHandle:
        """Open a provenance task; returns the handle prov_out closes."""
        tf = self.spec.transformation(transformation_name)
        if tf is None:
            raise CaptureError(f"unknown transformation {transformation_name!r}; the spec is the contract")
        inputs = inputs or {}
        self._warn_unknown(tf, inputs, tf.input_names(), "input")
        with self._lock:
            if self._closed:
                raise CaptureError("session is closed")
            task_seq = self._next_task_seq
            self._next_task_seq += 1
            self._open_tasks.add(task_seq)
        handle = TaskHandle(task_seq=task_seq, transformation_name=transformation_name, begun_at=_now_us())
        self._emit("task_begin", handle, inputs, handle.begun_at)
        return handle

    def prov_out(self, handle: TaskHandle, outputs: Optional[dict] = None) -> None:
        """Close a task, attaching its outputs."""
        if handle.closed:
            raise CaptureError(f"task {handle.task_seq} already ended")
        with self._lock:
            if handle.task_seq not in self._open_tasks:
                raise CaptureError(f"task {handle.task_seq} was not opened by this session")
            self._open_tasks.discard(handle.task_seq)
        handle.closed = True
        outputs = outputs or {}
        tf = self.spec.transformation(handle.transformation_name)
        if tf is not None:
            self._warn_unknown(tf, outputs, tf.output_names(), "output")
        self._emit("task_end", handle, outputs, _now_us())

    @contextmanager
    def task(self, transformation_name: str, inputs: Optional[dict] = None):
        """Context-manager form: yields a dict to fill with outputs."""
        handle = self.prov_in(transformation_name, inputs)
        outputs: dict = {}
        try:
            yield outputs
        finally:
            self.prov_out(handle, outputs)

    def _warn_unknown(self, tf: Transformation, attrs: dict, known: set, direction: str) -> None:
        for name in attrs:
            if name not in known:
                self.counters.unknown_attributes += 1
                logger.warning(
                    "attribute %r is not a declared %s of %r; passing it through as plain",
                    name,
                    direction,
                    tf.name,
                )

    def _emit(self, kind: str, handle: TaskHandle, attrs: dict, timestamp: int) -> None:
        payload = {name: _check_payload(value, name) for name, value in attrs.items()}
        with self._lock:
            seq_no = self._next_seq_no
            self._next_seq_no += 1
        event = {
            "event_id": uuid.uuid4().hex,
            "kind": kind,
            "client_id": self.client_id,
            "workflow_exec_id": self.workflow_exec_id,
            "task_seq": handle.task_seq,
            "transformation_name": handle.transformation_name,
            "attributes": payload,
            "timestamp": timestamp,
            "seq_no": seq_no,
        }
        try:
            self._queue.put_nowait(event)
        except queue.Full:
            self._wake.set()
            t0 = time.perf_counter()
            self._queue.put(event)  # block instead of dropping lineage
            self.counters.blocked_s += time.perf_counter() - t0
        self.counters.emitted += 1
        if self._queue.qsize() >= self.config.queue_max_size:
            self._wake.set()

    # -- delivery ---------------------------------------------------------------

    def _drain(self) -> list[dict]:
        out = []
        while len(out) < self.config.queue_max_size:
            try:
                out.append(self._queue.get_nowait())
            except queue.Empty:
                break
        return out

    def _deliver(self, events: list[dict]) -> None:
        if not events:
            return
        logged = 0
        if self._log is not None:
            for event in events:
                if self._log.append(event):
                    logged += 1
            self._log.flush()
            self.counters.logged += logged
        sent = False
        if self._online:
            body = json.dumps(
                {
                    "v": 1,
                    "client_id": self.client_id,
                    "spec_ref": {"workflow_name": self.spec.workflow_name, "version": self.spec.version},
                    "events": events,
                },
                sort_keys=True,
                separators=(",", ":"),
            ).encode("utf-8")
            backoff = 0.1
            for _ in range(3):
                try:
                    status, _ = self._tracker.post("/v1/capture", body)
                    if status == 200:
                        self.counters.posted += len(events)
                        sent = True
                        break
                    self.counters.send_failures += 1
                except OSError:
                    self.counters.send_failures += 1
                if self._closing.is_set():
                    break
                time.sleep(backoff)
                backoff *= 2
        if not sent and logged < len(events):
            # neither sink took some of these events; remember the loss
            self.counters.lost += len(events) - (logged if self._log is not None else 0)

    def _flush_loop(self) -> None:
        while True:
            if self._queue.empty():
                self._wake.wait(timeout=self.config.flush_interval_s)
                self._wake.clear()
            self._deliver(self._drain())
            if self._closing.is_set() and self._queue.empty():
                return

    # -- lifecycle ----------------------------------------------------------------

    def flush(self, timeout: float = 30.0) -> None:
        """Push everything queued to the sinks; returns once the queue is empty."""
        deadline = time.monotonic() + timeout
        while not self._queue.empty():
            self._wake.set()
            if time.monotonic() > deadline:
                raise CaptureError(f"flush timed out with {self._queue.qsize()} events queued")
            time.sleep(0.01)

    def close(self, timeout: float = 30.0) -> SessionCounters:
        """Flush, stop the flusher, release sinks.

        Raises CaptureError if any event ended up in no sink at all; the
        events themselves are gone, so surfacing the count is all that's left.
        """
        if self._closed:
            return self.counters
        self.flush(timeout=timeout)
        self._closing.set()
        self._wake.set()
        self._flusher.join(timeout=timeout)
        self._closed = True
        if self._log is not None:
            self._log.close()
        if self._tracker is not None:
            self._tracker.close()
        if self.counters.lost:
            raise CaptureError(f"{self.counters.lost} events were not delivered to any sink")
        return self.counters

    def __enter__(self) -> "ProvSession":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()


def _now_us() -> int:
    return time.time_ns() // 1000


def open_session(
    spec_path: Union[str, "WorkflowSpec"],
    config: Optional[CaptureConfig] = None,
    client_id: Optional[str] = None,
) -> ProvSession:
    """Load and validate the workflow spec (once), then open a capture session.

    Raises SpecError listing every violated rule, or SessionStartupError when
    no usable sink is reachable.
    """
    spec = spec_path if isinstance(spec_path, WorkflowSpec) else load_workflow_spec(spec_path)
    return ProvSession(spec, config or CaptureConfig(), client_id=client_id)
