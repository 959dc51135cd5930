"""Subprocess entry for parallel workflows: reads a job spec, prints a result.

Usage (internal): python -m provtrace.bench._worker '<json job>'
The job carries the workload parameters, capture settings, calibrated spin
rate, and a shared wall-clock start time acting as the start barrier.
"""

from __future__ import annotations

import json
import sys

from provtrace.bench.workload import RunResult, WorkloadSpec, run_workload
from provtrace.wire.events import CaptureConfig


def run_job(job: dict) -> RunResult:
    capture = None
    if job.get("capture"):
        capture = CaptureConfig(**job["capture"])
    spec = WorkloadSpec(
        epochs=job["epochs"],
        iterations_per_epoch=job["iterations_per_epoch"],
        compute_ms=job["compute_ms"],
        capture=capture,
        busy_fraction=job.get("busy_fraction", 1.0),
        spins_per_ms=job.get("spins_per_ms"),
    )
    return run_workload(spec, start_at=job.get("start_at"))


def main() -> None:
    job = json.loads(sys.argv[1])
    result = run_job(job)
    print(json.dumps(result.to_obj()))


if __name__ == "__main__":
    main()
