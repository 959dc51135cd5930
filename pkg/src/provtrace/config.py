"""Configuration: provtrace.toml, flat defaults, environment overrides.

Environment variables override file values for capture-side settings:
PROVTRACE_ENDPOINT, PROVTRACE_QUEUE_SIZE, PROVTRACE_DISKFUL (log path,
empty disables), PROVTRACE_ONLINE (0/1).
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class TrackerSection:
    host: str = "127.0.0.1"
    port: int = 7461
    namespace: str = "pl"
    group_size: int = 50
    flush_interval_s: float = 1.0
    parked_timeout_s: float = 60.0
    state_path: str = ""


@dataclass
class ManagerSection:
    host: str = "127.0.0.1"
    port: int = 7462
    store_path: str = ""


@dataclass
class QuerySection:
    host: str = "127.0.0.1"
    port: int = 7463


@dataclass
class ClientSection:
    queue_size: int = 50
    flush_interval_s: float = 1.0
    online: bool = True
    diskful: str = ""


@dataclass
class BenchSection:
    compute_ms: float = 50.0
    epochs: int = 20
    iterations: int = 30
    repeats: int = 10
    seed: int = 7
    out_dir: str = "bench_out"


@dataclass
class Config:
    tracker: TrackerSection = field(default_factory=TrackerSection)
    manager: ManagerSection = field(default_factory=ManagerSection)
    query: QuerySection = field(default_factory=QuerySection)
    client: ClientSection = field(default_factory=ClientSection)
    bench: BenchSection = field(default_factory=BenchSection)

    @property
    def tracker_endpoint(self) -> str:
        return f"http://{self.tracker.host}:{self.tracker.port}"

    @property
    def manager_endpoint(self) -> str:
        return f"http://{self.manager.host}:{self.manager.port}"

    @property
    def query_endpoint(self) -> str:
        return f"http://{self.query.host}:{self.query.port}"


def _apply_section(section, data: dict, where: str) -> None:
    known = {f.name: f.type for f in fields(section)}
    for key, value in data.items():
        if key not in known:
            raise ValueError(f"{where}: unknown config key {key!r}")
        setattr(section, key, value)


def load_config(path: Optional[str] = None) -> Config:
    """Read provtrace.toml (explicit path, else ./provtrace.toml if present)."""
    config = Config()
    toml_path = Path(path) if path else Path("provtrace.toml")
    if toml_path.exists():
        data = tomllib.loads(toml_path.read_text(encoding="utf-8"))
        for name in ("tracker", "manager", "query", "client", "bench"):
            if name in data:
                _apply_section(getattr(config, name), data[name], name)
    elif path:
        raise FileNotFoundError(path)
    _apply_env(config)
    return config


def _apply_env(config: Config) -> None:
    endpoint = os.environ.get("PROVTRACE_ENDPOINT")
    if endpoint:
        hostport = endpoint.removeprefix("http://").rstrip("/")
        host, _, port = hostport.partition(":")
        config.tracker.host = host or config.tracker.host
        if port:
            config.tracker.port = int(port)
    queue = os.environ.get("PROVTRACE_QUEUE_SIZE")
    if queue:
        config.client.queue_size = int(queue)
    diskful = os.environ.get("PROVTRACE_DISKFUL")
    if diskful is not None:
        config.client.diskful = diskful
    online = os.environ.get("PROVTRACE_ONLINE")
    if online is not None and online != "":
        config.client.online = online not in ("0", "false", "no")
