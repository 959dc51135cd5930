"""The two experiments and the latency probe.

Settings runs interleave conditions round-robin so slow clock or thermal
drift lands evenly on every condition. Scalability launches x workflow
subprocesses against one tracker with a shared start time; per-workflow
compute is duty-cycled to the machine's cores so the measurement stresses
the provenance pipeline, not the scheduler.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import requests

from provtrace.bench.driver import WorkloadSession
from provtrace.bench.report import BenchReport, percentile
from provtrace.bench.workload import (
    PROBE_TRANSFORMATION,
    WorkloadSpec,
    bench_spec,
    calibrate_spins_per_ms,
    run_workload,
)
from provtrace.core.prospective import spec_to_obj
from provtrace.wire.events import CaptureConfig


@dataclass(frozen=True)
class Setting:
    """One capture configuration; labels spell out the combination."""

    queue_size: int
    diskful: bool
    online: bool

    @property
    def label(self) -> str:
        disk = "diskful" if self.diskful else "diskless"
        timing = "online" if self.online else "offline"
        return f"q{self.queue_size}-{disk}-{timing}"


def all_settings(queue_sizes=(1, 50)) -> list[Setting]:
    """Every sink-consistent {queue} x {disk} x {timing} combination."""
    out = []
    for q in queue_sizes:
        for diskful in (False, True):
            for online in (True, False):
                if not diskful and not online:
                    continue  # no sink
                out.append(Setting(q, diskful, online))
    return out


def register_bench_spec(tracker_endpoint: str) -> None:
    resp = requests.post(tracker_endpoint.rstrip("/") + "/v1/spec", json=spec_to_obj(bench_spec()), timeout=10)
    resp.raise_for_status()


def capture_config_for(setting: Setting, tracker_endpoint: str, log_dir: Path, tag: str) -> CaptureConfig:
    log_path = None
    if setting.diskful:
        log_path = str(log_dir / f"{setting.label}-{tag}.ndjson")
    return CaptureConfig(
        queue_max_size=setting.queue_size,
        persist_to_disk=setting.diskful,
        send_online=setting.online,
        tracker_endpoint=tracker_endpoint,
        log_path=log_path,
    )


def run_settings_experiment(
    tracker_endpoint: str,
    workload: WorkloadSpec,
    settings: Optional[list[Setting]] = None,
    repeats: int = 10,
    log_dir: Optional[Path] = None,
    progress=None,
) -> BenchReport:
    """Baseline plus every setting, >= repeats runs each, interleaved."""
    settings = settings if settings is not None else all_settings()
    log_dir = Path(log_dir or "bench_out/logs")
    log_dir.mkdir(parents=True, exist_ok=True)
    if any(s.online for s in settings):
        register_bench_spec(tracker_endpoint)
    spins = workload.spins_per_ms or calibrate_spins_per_ms()
    report = BenchReport(title="capture settings experiment")

    conditions: list[Optional[Setting]] = [None] + list(settings)
    for rep in range(repeats):
        # rotate the order each repetition so slow drift lands evenly on all conditions
        rotated = conditions[rep % len(conditions):] + conditions[: rep % len(conditions)]
        for condition in rotated:
            label = "baseline" if condition is None else condition.label
            capture = None
            if condition is not None:
                capture = capture_config_for(condition, tracker_endpoint, log_dir, f"r{rep}-{uuid.uuid4().hex[:6]}")
            spec = WorkloadSpec(
                epochs=workload.epochs,
                iterations_per_epoch=workload.iterations_per_epoch,
                compute_ms=workload.compute_ms,
                capture=capture,
                busy_fraction=workload.busy_fraction,
                spins_per_ms=spins,
            )
            result = run_workload(spec)
            report.sample_set(label).add(result.wall_s, result.events_emitted, result.blocked_s)
            if progress:
                progress(f"[settings] rep {rep + 1}/{repeats} {label}: {result.wall_s:.3f}s")
    return report


def run_scalability_experiment(
    tracker_endpoint: str,
    workload: WorkloadSpec,
    x_values=(1, 2, 4, 8),
    repeats: int = 10,
    busy_fraction: Optional[float] = None,
    progress=None,
) -> BenchReport:
    """Weak scaling: x parallel workflow processes, same per-workflow load."""
    register_bench_spec(tracker_endpoint)
    max_x = max(x_values)
    if busy_fraction is None:
        cores = os.cpu_count() or 1
        # leave one core for the services, cap the busy duty cycle at what fits
        busy_fraction = min(1.0, 0.7 * max(1, cores - 1) / max_x)
    spins = workload.spins_per_ms or calibrate_spins_per_ms()
    report = BenchReport(title=f"weak scalability (busy_fraction={busy_fraction:.3f})", baseline_label="x1")

    for rep in range(repeats):
        for x in x_values:
            wall_times = _run_parallel(
                x,
                {
                    "epochs": workload.epochs,
                    "iterations_per_epoch": workload.iterations_per_epoch,
                    "compute_ms": workload.compute_ms,
                    "busy_fraction": busy_fraction,
                    "spins_per_ms": spins,
                    "capture": {
                        "queue_max_size": 50,
                        "persist_to_disk": False,
                        "send_online": True,
                        "tracker_endpoint": tracker_endpoint,
                    },
                },
            )
            for w in wall_times:
                report.sample_set(f"x{x}").add(w)
            if progress:
                progress(f"[scalability] rep {rep + 1}/{repeats} x={x}: " + ", ".join(f"{w:.2f}s" for w in wall_times))
    return report


def _run_parallel(x: int, job: dict, start_margin_s: float = 3.0) -> list[float]:
    job = dict(job)
    job["start_at"] = time.time() + start_margin_s
    procs = [
        subprocess.Popen(
            [sys.executable, "-m", "provtrace.bench._worker", json.dumps(job)],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
        for _ in range(x)
    ]
    walls = []
    for proc in procs:
        out, err = proc.communicate(timeout=600)
        if proc.returncode != 0:
            raise RuntimeError(f"workflow process failed: {err.decode(errors='replace')[-500:]}")
        walls.append(json.loads(out)["wall_s"])
    return walls


@dataclass
class LatencyResult:
    samples_s: list[float] = field(default_factory=list)
    failures: int = 0

    @property
    def p95_s(self) -> float:
        return percentile(self.samples_s, 95)

    def to_obj(self) -> dict:
        obj = {"probes": len(self.samples_s) + self.failures, "failures": self.failures}
        if self.samples_s:
            obj.update(
                p50_s=round(percentile(self.samples_s, 50), 3),
                p95_s=round(self.p95_s, 3),
                max_s=round(max(self.samples_s), 3),
            )
        return obj


def measure_latency(
    tracker_endpoint: str,
    query_endpoint: str,
    n_probes: int = 50,
    queue_size: int = 50,
    flush_interval_s: float = 1.0,
    probe_timeout_s: float = 30.0,
    progress=None,
) -> LatencyResult:
    """Emit uniquely-valued probe events; poll until each is queryable."""
    register_bench_spec(tracker_endpoint)
    config = CaptureConfig(
        queue_max_size=queue_size,
        persist_to_disk=False,
        send_online=True,
        tracker_endpoint=tracker_endpoint,
        flush_interval_s=flush_interval_s,
    )
    session = WorkloadSession(bench_spec(), config, keep_ids=False)
    result = LatencyResult()
    http = requests.Session()
    url = query_endpoint.rstrip("/") + "/v1/query"
    try:
        for i in range(n_probes):
            probe_id = f"probe-{uuid.uuid4().hex}"
            handle = session.task_begin(PROBE_TRANSFORMATION, {})
            session.task_end(handle, {"probe_id": probe_id})
            emitted_at = time.perf_counter()
            query = f'SELECT ?v WHERE {{ ?v <provml:value> "{probe_id}" }}'
            deadline = emitted_at + probe_timeout_s
            seen = None
            while time.perf_counter() < deadline:
                resp = http.post(url, json={"text": query}, timeout=10)
                if resp.status_code == 200 and resp.json()["rows"]:
                    seen = time.perf_counter()
                    break
                time.sleep(0.05)
            if seen is None:
                result.failures += 1
            else:
                result.samples_s.append(seen - emitted_at)
            if progress and (i + 1) % 10 == 0:
                progress(f"[latency] {i + 1}/{n_probes} probes, failures={result.failures}")
    finally:
        session.close()
        http.close()
    return result
