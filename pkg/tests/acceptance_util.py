"""Helpers for the acceptance suite: service subprocesses and criterion reporting."""

from __future__ import annotations

import os
import signal
import socket
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

FAST = os.environ.get("PROVTRACE_ACCEPT_FAST", "") not in ("", "0")


def criterion(name: str, ok: bool, detail: str) -> None:
    line = f"[ACCEPTANCE] {'PASS' if ok else 'FAIL'} {name}: {detail}"
    print(line, flush=True)
    assert ok, line


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def wait_health(url: str, timeout_s: float = 20.0) -> None:
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        try:
            if requests.get(url + "/v1/health", timeout=2).status_code == 200:
                return
        except requests.RequestException:
            pass
        time.sleep(0.05)
    raise TimeoutError(f"service at {url} not healthy after {timeout_s}s")


@dataclass
class ServiceProcs:
    procs: list[subprocess.Popen] = field(default_factory=list)
    tracker_endpoint: str = ""
    manager_endpoint: str = ""
    query_endpoint: str = ""

    def stop(self) -> None:
        for proc in self.procs:
            if proc.poll() is None:
                proc.send_signal(signal.SIGTERM)
        for proc in self.procs:
            try:
                proc.wait(timeout=15)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait(timeout=5)


def _pin_prefix() -> list[str]:
    """Pin services onto the last core, mirroring the deployed separation of
    provenance services from workload nodes; benchmark workloads float on the
    remaining cores. No-op on single-core machines or without taskset."""
    cores = os.cpu_count() or 1
    if cores < 2:
        return []
    from shutil import which

    if not which("taskset"):
        return []
    return ["taskset", "-c", str(cores - 1)]


def spawn(args: list[str], log_path: Path, pin: bool = True) -> subprocess.Popen:
    log = open(log_path, "ab")
    prefix = _pin_prefix() if pin else []
    return subprocess.Popen(
        [*prefix, sys.executable, "-m", "provtrace", *args],
        stdout=log,
        stderr=subprocess.STDOUT,
        cwd=str(log_path.parent),
    )


def spawn_all(tmp: Path, tag: str = "all", tracker_state: str | None = None) -> ServiceProcs:
    """`provtrace serve all` in its own process; returns once every service is healthy."""
    t, m, q = free_port(), free_port(), free_port()
    args = [
        "serve", "all",
        "--tracker-port", str(t),
        "--manager-port", str(m),
        "--query-port", str(q),
    ]
    if tracker_state:
        args += ["--state", tracker_state]
    proc = spawn(args, tmp / f"serve-{tag}.log")
    services = ServiceProcs(
        procs=[proc],
        tracker_endpoint=f"http://127.0.0.1:{t}",
        manager_endpoint=f"http://127.0.0.1:{m}",
        query_endpoint=f"http://127.0.0.1:{q}",
    )
    try:
        for url in (services.manager_endpoint, services.query_endpoint, services.tracker_endpoint):
            wait_health(url)
    except Exception:
        services.stop()
        raise
    return services
