"""Instrumentation client for provtrace.

Wrap each data transformation in a ``prov_in()``/``prov_out()`` pair; the
session queues capture events and a background flusher delivers them to the
tracker and/or a local append log without the workflow ever waiting on the
network.

    from provtrace_client import CaptureConfig, open_session

    session = open_session("workflow_spec.json", CaptureConfig(tracker_endpoint=...))
    for epoch in range(epochs):
        for batch in loader:
            handle = session.prov_in("train_iteration", {"epoch": epoch})
            loss = train_step(batch)
            session.prov_out(handle, {"loss": loss})
    session.close()
"""

from provtrace_client.config import CaptureConfig, config_from_env
from provtrace_client.session import (
    CaptureError,
    ProvSession,
    SessionStartupError,
    TaskHandle,
    open_session,
)
from provtrace_client.spec import SpecError, WorkflowSpec, load_workflow_spec
from provtrace_client.log import replay_event_log

__version__ = "0.1.0"

__all__ = [
    "CaptureConfig",
    "CaptureError",
    "ProvSession",
    "SessionStartupError",
    "SpecError",
    "TaskHandle",
    "WorkflowSpec",
    "config_from_env",
    "load_workflow_spec",
    "open_session",
    "replay_event_log",
]
