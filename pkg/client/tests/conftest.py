import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest
import requests

WORKFLOW_SPEC = {
    "workflow_name": "toy_training",
    "version": "1",
    "data_stores": [
        {"store_id": "fs", "store_kind": "filesystem", "location": "/data"},
    ],
    "transformations": [
        {
            "name": "training",
            "ml_semantics": "training",
            "inputs": [
                {"name": "learning_rate", "kind": "literal", "ml_role": "hyperparameter"},
                {"name": "epochs", "kind": "literal", "ml_role": "hyperparameter"},
            ],
            "outputs": [
                {"name": "model", "kind": "data_reference", "ml_role": "model_reference", "store_id": "fs"},
                {"name": "loss", "kind": "literal", "ml_role": "evaluation_metric"},
            ],
        },
        {
            "name": "train_iteration",
            "ml_semantics": "training",
            "inputs": [{"name": "epoch"}],
            "outputs": [{"name": "iter_loss", "ml_role": "evaluation_metric"}],
        },
    ],
}


@pytest.fixture()
def spec_file(tmp_path) -> Path:
    path = tmp_path / "workflow_spec.json"
    path.write_text(json.dumps(WORKFLOW_SPEC), encoding="utf-8")
    return path


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class Services:
    """The provenance services, reached only through their CLI and HTTP APIs."""

    def __init__(self, tmp: Path):
        self.tracker_port = free_port()
        self.manager_port = free_port()
        self.query_port = free_port()
        self.log = open(tmp / "services.log", "ab")
        self.proc = subprocess.Popen(
            [
                sys.executable, "-m", "provtrace", "serve", "all",
                "--tracker-port", str(self.tracker_port),
                "--manager-port", str(self.manager_port),
                "--query-port", str(self.query_port),
            ],
            stdout=self.log,
            stderr=subprocess.STDOUT,
            cwd=str(tmp),
        )

    @property
    def tracker_endpoint(self) -> str:
        return f"http://127.0.0.1:{self.tracker_port}"

    @property
    def query_endpoint(self) -> str:
        return f"http://127.0.0.1:{self.query_port}"

    def wait_ready(self, timeout_s: float = 20.0) -> None:
        deadline = time.monotonic() + timeout_s
        ports = [self.manager_port, self.query_port, self.tracker_port]
        for port in ports:
            while True:
                try:
                    if requests.get(f"http://127.0.0.1:{port}/v1/health", timeout=2).ok:
                        break
                except requests.RequestException:
                    pass
                if time.monotonic() > deadline:
                    raise TimeoutError(f"service on port {port} never became healthy")
                time.sleep(0.05)

    def stop(self) -> None:
        self.proc.terminate()
        try:
            self.proc.wait(timeout=15)
        except subprocess.TimeoutExpired:
            self.proc.kill()


@pytest.fixture()
def services(tmp_path):
    procs = Services(tmp_path)
    try:
        procs.wait_ready()
        yield procs
    finally:
        procs.stop()
