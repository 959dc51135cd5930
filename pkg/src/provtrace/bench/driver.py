"""Capture driver for the benchmark harness.

A bounded queue decouples the instrumented hot loop from delivery: the
flusher wakes when the queue fills or the flush timer fires, appends to the
diskful log first, then posts the batch online. The producer never waits
for the network; it only blocks when the queue is full, and that blocked
time is counted so overhead stays attributable.
"""

from __future__ import annotations

import http.client
import json
import queue
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional
from urllib.parse import urlparse

from provtrace.core.prospective import ProspectiveSpec
from provtrace.core.retrospective import now_us
from provtrace.wire.codec import encode_batch
from provtrace.wire.events import CaptureConfig, CaptureEvent, EventBatch, EventKind, SpecRef, new_event_id


class _Poster:
    """Keep-alive POST over http.client: far fewer interpreter ops per request
    than a full-featured HTTP library, which matters next to a busy hot loop."""

    def __init__(self, endpoint: str, timeout: float = 10.0):
        parsed = urlparse(endpoint)
        self._host = parsed.hostname or "127.0.0.1"
        self._port = parsed.port or 80
        self._timeout = timeout
        self._conn: Optional[http.client.HTTPConnection] = None

    def post(self, path: str, body: bytes) -> tuple[int, bytes]:
        """Returns (status, body); raises OSError when the service is unreachable."""
        if self._conn is None:
            self._conn = http.client.HTTPConnection(self._host, self._port, timeout=self._timeout)
        try:
            self._conn.request("POST", path, body=body, headers={"Content-Type": "application/json"})
            resp = self._conn.getresponse()
            data = resp.read()
            return resp.status, data
        except (OSError, http.client.HTTPException):
            self.close()
            raise

    def close(self) -> None:
        if self._conn is not None:
            try:
                self._conn.close()
            finally:
                self._conn = None


@dataclass
class TaskHandle:
    task_seq: int
    transformation_name: str
    begun_at: int
    closed: bool = False


@dataclass
class SessionStats:
    emitted: int = 0
    posted: int = 0
    logged: int = 0
    dropped_sends: int = 0
    dropped_log_writes: int = 0
    blocked_s: float = 0.0
    emitted_ids: list = field(default_factory=list)


class WorkloadSession:
    """One workflow execution emitting capture events to the configured sinks."""

    def __init__(
        self,
        spec: ProspectiveSpec,
        config: CaptureConfig,
        client_id: Optional[str] = None,
        workflow_exec_id: Optional[str] = None,
        rng: Optional[random.Random] = None,
        register: bool = True,
        keep_ids: bool = True,
        retry_attempts: int = 3,
    ):
        self.spec = spec
        self.config = config
        self._rng = rng
        self.workflow_exec_id = workflow_exec_id or self._new_uuid()
        self.client_id = client_id or f"client-{self.workflow_exec_id[:8]}"
        self.stats = SessionStats()
        self._keep_ids = keep_ids
        self._retry_attempts = retry_attempts
        self._queue: queue.Queue[CaptureEvent] = queue.Queue(maxsize=config.queue_max_size)
        self._wake = threading.Event()
        self._closing = threading.Event()
        self._next_task_seq = 0
        self._next_seq_no = 0
        self._counter_lock = threading.Lock()
        self._http: Optional[_Poster] = _Poster(config.tracker_endpoint) if config.send_online else None
        self._log = None
        if config.persist_to_disk:
            from provtrace.wire.eventlog import EventLogWriter

            self._log = EventLogWriter(config.log_path)
        if config.send_online and register:
            status, body = self._http.post(
                "/v1/workflow-exec",
                json.dumps(
                    {
                        "workflow_name": spec.workflow_name,
                        "version": spec.version,
                        "workflow_exec_id": self.workflow_exec_id,
                    }
                ).encode("utf-8"),
            )
            if status != 200:
                raise RuntimeError(f"workflow-exec registration failed: {status} {body[:200]!r}")
        self._flusher = threading.Thread(target=self._flush_loop, name="prov-flusher", daemon=True)
        self._flusher.start()

    def _new_uuid(self) -> str:
        if self._rng is not None:
            return str(uuid.UUID(int=self._rng.getrandbits(128)))
        return str(uuid.uuid4())

    def _new_event_id(self) -> str:
        return new_event_id(self._rng)

    # -- producer side ---------------------------------------------------------

    def _enqueue(self, event: CaptureEvent) -> None:
        try:
            self._queue.put_nowait(event)
        except queue.Full:
            self._wake.set()
            t0 = time.perf_counter()
            self._queue.put(event)  # blocking overflow policy: completeness over speed
            self.stats.blocked_s += time.perf_counter() - t0
        if self._queue.qsize() >= self.config.queue_max_size:
            self._wake.set()
        self.stats.emitted += 1
        if self._keep_ids:
            self.stats.emitted_ids.append(event.event_id)

    def task_begin(self, transformation_name: str, inputs: Optional[dict] = None) -> TaskHandle:
        with self._counter_lock:
            task_seq = self._next_task_seq
            self._next_task_seq += 1
            seq_no = self._next_seq_no
            self._next_seq_no += 1
        ts = now_us()
        self._enqueue(
            CaptureEvent(
                event_id=self._new_event_id(),
                kind=EventKind.TASK_BEGIN,
                client_id=self.client_id,
                workflow_exec_id=self.workflow_exec_id,
                task_seq=task_seq,
                transformation_name=transformation_name,
                attributes=inputs or {},
                timestamp=ts,
                seq_no=seq_no,
            )
        )
        return TaskHandle(task_seq=task_seq, transformation_name=transformation_name, begun_at=ts)

    def task_end(self, handle: TaskHandle, outputs: Optional[dict] = None) -> None:
        if handle.closed:
            raise RuntimeError(f"task {handle.task_seq} already ended")
        handle.closed = True
        with self._counter_lock:
            seq_no = self._next_seq_no
            self._next_seq_no += 1
        self._enqueue(
            CaptureEvent(
                event_id=self._new_event_id(),
                kind=EventKind.TASK_END,
                client_id=self.client_id,
                workflow_exec_id=self.workflow_exec_id,
                task_seq=handle.task_seq,
                transformation_name=handle.transformation_name,
                attributes=outputs or {},
                timestamp=now_us(),
                seq_no=seq_no,
            )
        )

    # -- flusher side ------------------------------------------------------------

    def _drain(self) -> list[CaptureEvent]:
        out = []
        while len(out) < self.config.queue_max_size:
            try:
                out.append(self._queue.get_nowait())
            except queue.Empty:
                break
        return out

    def _post(self, events: list[CaptureEvent]) -> bool:
        batch = EventBatch(
            client_id=self.client_id,
            spec_ref=SpecRef(self.spec.workflow_name, self.spec.version),
            events=tuple(events),
        )
        body = encode_batch(batch)
        backoff = 0.1
        for _ in range(self._retry_attempts):
            try:
                status, _ = self._http.post("/v1/capture", body)
                if status == 200:
                    self.stats.posted += len(events)
                    return True
            except OSError:
                pass
            if self._closing.is_set():
                break
            time.sleep(backoff)
            backoff *= 2
        self.stats.dropped_sends += len(events)
        return False

    def _flush_batch(self, events: list[CaptureEvent]) -> None:
        if not events:
            return
        if self._log is not None:
            for event in events:
                if self._log.append(event):
                    self.stats.logged += 1
                else:
                    self.stats.dropped_log_writes += 1
            self._log.flush()
        if self._http is not None:
            self._post(events)

    def _flush_loop(self) -> None:
        while True:
            if self._queue.empty():
                self._wake.wait(timeout=self.config.flush_interval_s)
                self._wake.clear()
            self._flush_batch(self._drain())
            if self._closing.is_set() and self._queue.empty():
                return

    # -- lifecycle -----------------------------------------------------------------

    def flush(self, timeout: float = 30.0) -> None:
        """Drain the queue to the configured sinks and return once empty."""
        deadline = time.monotonic() + timeout
        while not self._queue.empty():
            self._wake.set()
            if time.monotonic() > deadline:
                raise TimeoutError(f"{self._queue.qsize()} events still queued")
            time.sleep(0.01)

    def close(self, timeout: float = 30.0) -> SessionStats:
        self.flush(timeout=timeout)
        self._closing.set()
        self._wake.set()
        self._flusher.join(timeout=timeout)
        if self._log is not None:
            self._log.close()
        if self._http is not None:
            self._http.close()
        return self.stats
