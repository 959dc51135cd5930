"""Service wiring and in-process uvicorn runners.

``serve all`` hosts manager, query, and tracker in one process (the query
engine reads the manager's store object directly); individual services run
standalone, with the query service following the manager's on-disk store.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Optional

import uvicorn
from fastapi import FastAPI

from provtrace.config import Config
from provtrace.manager.app import create_manager_app
from provtrace.manager.service import ManagerCore
from provtrace.query.app import create_query_app
from provtrace.query.engine import QueryEngine
from provtrace.store.triples import TripleStore
from provtrace.tracker.app import create_tracker_app
from provtrace.tracker.core import TrackerConfig, TrackerCore


@dataclass
class ServerHandle:
    name: str
    server: uvicorn.Server
    thread: threading.Thread
    on_stop: Optional[callable] = None

    @property
    def port(self) -> int:
        return self.server.servers[0].sockets[0].getsockname()[1]

    def stop(self) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=15)
        if self.on_stop:
            self.on_stop()


def start_server(app: FastAPI, host: str, port: int, name: str, on_stop=None) -> ServerHandle:
    config = uvicorn.Config(app=app, host=host, port=port, log_level="warning", access_log=False)
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, name=f"uvicorn-{name}", daemon=True)
    thread.start()
    deadline = time.monotonic() + 15
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError(f"{name} server failed to start on {host}:{port}")
        if not thread.is_alive():
            raise RuntimeError(f"{name} server thread died during startup")
        time.sleep(0.01)
    return ServerHandle(name=name, server=server, thread=thread, on_stop=on_stop)


def build_tracker(config: Config) -> TrackerCore:
    return TrackerCore(
        TrackerConfig(
            namespace=config.tracker.namespace,
            manager_endpoint=config.manager_endpoint,
            group_size=config.tracker.group_size,
            flush_interval_s=config.tracker.flush_interval_s,
            parked_timeout_s=config.tracker.parked_timeout_s,
            state_path=config.tracker.state_path or None,
        )
    )


def serve_tracker(config: Config) -> ServerHandle:
    core = build_tracker(config)
    app = create_tracker_app(core)
    return start_server(app, config.tracker.host, config.tracker.port, "tracker", on_stop=core.close)


def serve_manager(config: Config) -> ServerHandle:
    store = TripleStore(config.manager.store_path or None)
    core = ManagerCore(store)
    app = create_manager_app(core)
    return start_server(app, config.manager.host, config.manager.port, "manager", on_stop=store.close)


def serve_query(config: Config) -> ServerHandle:
    if config.manager.store_path:
        store = TripleStore(config.manager.store_path, read_only=True)
        follow = True
    else:
        store = TripleStore()
        follow = False
    app = create_query_app(QueryEngine(store), follow_store=follow)
    return start_server(app, config.query.host, config.query.port, "query")


def serve_all(config: Config) -> list[ServerHandle]:
    """Manager + query share one store object; tracker forwards over HTTP.

    Requesting port 0 lets the kernel pick; the config is updated with the
    bound ports so the tracker forwards to wherever the manager landed.
    """
    store = TripleStore(config.manager.store_path or None)
    manager_core = ManagerCore(store)
    handles = [
        start_server(create_manager_app(manager_core), config.manager.host, config.manager.port, "manager",
                     on_stop=store.close)
    ]
    config.manager.port = handles[0].port
    try:
        handles.append(
            start_server(create_query_app(QueryEngine(store)), config.query.host, config.query.port, "query")
        )
        config.query.port = handles[1].port
        tracker_core = build_tracker(config)
        handles.append(
            start_server(create_tracker_app(tracker_core), config.tracker.host, config.tracker.port, "tracker",
                         on_stop=tracker_core.close)
        )
        config.tracker.port = handles[2].port
    except Exception:
        for handle in reversed(handles):
            handle.stop()
        raise
    return handles


def stop_all(handles: list[ServerHandle]) -> None:
    # tracker first, so its final flush still finds the manager up
    for handle in sorted(handles, key=lambda h: 0 if h.name == "tracker" else 1):
        handle.stop()
