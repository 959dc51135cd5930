"""Synthetic training workload: calibrated busy-wait loops with capture around each iteration.

Compute is a fixed amount of CPU work (spin count calibrated once per
experiment), not a deadline wait, so capture costs show up in wall time.
An optional busy_fraction turns each iteration into busy+sleep with the
same period; the scalability experiment uses it to emulate accelerator-
bound workflows when there are fewer cores than parallel workflows.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Optional

from provtrace.core.prospective import (
    AttributeSpec,
    MlRole,
    MlSemantics,
    ProspectiveSpec,
    TransformationSpec,
)
from provtrace.wire.events import CaptureConfig
from provtrace.bench.driver import SessionStats, WorkloadSession

ITERATION_TRANSFORMATION = "train_iteration"
PROBE_TRANSFORMATION = "probe"


def bench_spec() -> ProspectiveSpec:
    """Prospective spec for the synthetic training workflow (and latency probes)."""
    return ProspectiveSpec(
        workflow_name="bench_training",
        version="1",
        transformations=(
            TransformationSpec(
                name=ITERATION_TRANSFORMATION,
                ml_semantics=MlSemantics.TRAINING,
                inputs=(AttributeSpec("epoch"), AttributeSpec("iteration")),
                outputs=(AttributeSpec("loss", ml_role=MlRole.EVALUATION_METRIC),),
            ),
            TransformationSpec(
                name=PROBE_TRANSFORMATION,
                outputs=(AttributeSpec("probe_id"),),
            ),
        ),
    )


def _spin(n: int) -> int:
    acc = 0
    for i in range(n):
        acc ^= i
    return acc


def calibrate_spins_per_ms(samples: int = 5) -> float:
    """Spins that burn one millisecond on this machine (median of timed trials)."""
    n = 10_000
    while True:
        t0 = time.perf_counter()
        _spin(n)
        if time.perf_counter() - t0 >= 0.02:
            break
        n *= 2
    rates = []
    for _ in range(samples):
        t0 = time.perf_counter()
        _spin(n)
        rates.append(n / ((time.perf_counter() - t0) * 1000))
    return statistics.median(rates)


@dataclass
class WorkloadSpec:
    epochs: int = 20
    iterations_per_epoch: int = 30
    compute_ms: float = 50.0
    parallel_workflows: int = 1
    capture: Optional[CaptureConfig] = None  # None = capture off (baseline)
    busy_fraction: float = 1.0
    spins_per_ms: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if min(self.epochs, self.iterations_per_epoch, self.parallel_workflows) < 1:
            raise ValueError("epochs, iterations_per_epoch, parallel_workflows must be >= 1")
        if self.compute_ms <= 0:
            raise ValueError("compute_ms must be positive")
        if not (0.0 < self.busy_fraction <= 1.0):
            raise ValueError("busy_fraction must be in (0, 1]")

    @property
    def iterations(self) -> int:
        return self.epochs * self.iterations_per_epoch

    @property
    def expected_events(self) -> int:
        return 0 if self.capture is None else 2 * self.iterations


@dataclass
class RunResult:
    wall_s: float
    events_emitted: int
    blocked_s: float = 0.0
    stats: Optional[SessionStats] = None
    workflow_exec_id: Optional[str] = None

    def to_obj(self) -> dict:
        return {
            "wall_s": self.wall_s,
            "events_emitted": self.events_emitted,
            "blocked_s": self.blocked_s,
            "workflow_exec_id": self.workflow_exec_id,
        }


def run_workload(
    spec: WorkloadSpec,
    session: Optional[WorkloadSession] = None,
    keep_ids: bool = False,
    start_at: Optional[float] = None,
) -> RunResult:
    """Execute the loop; the caller owns service setup when capture is online.

    A provided session is closed by this function. The hot loop does no
    network or file I/O of its own; with capture off it touches nothing but
    the spin counter.
    """
    spins_per_ms = spec.spins_per_ms or calibrate_spins_per_ms()
    busy_spins = max(1, int(spins_per_ms * spec.compute_ms * spec.busy_fraction))
    sleep_s = spec.compute_ms * (1.0 - spec.busy_fraction) / 1000

    if spec.capture is not None and session is None:
        session = WorkloadSession(bench_spec(), spec.capture, keep_ids=keep_ids)

    if start_at is not None:
        delay = start_at - time.time()
        if delay > 0:
            time.sleep(delay)

    # wall time covers the loop plus the final flush: everything capture adds
    # to the script's runtime after the one-time session setup
    loss = 1.0
    t0 = time.perf_counter()
    for epoch in range(spec.epochs):
        for iteration in range(spec.iterations_per_epoch):
            if session is not None:
                handle = session.task_begin(
                    ITERATION_TRANSFORMATION, {"epoch": epoch, "iteration": iteration}
                )
            _spin(busy_spins)
            if sleep_s:
                time.sleep(sleep_s)
            loss *= 0.9995
            if session is not None:
                session.task_end(handle, {"loss": round(loss, 6)})
    if session is not None:
        stats = session.close()
        wall_s = time.perf_counter() - t0
        return RunResult(
            wall_s=wall_s,
            events_emitted=stats.emitted,
            blocked_s=stats.blocked_s,
            stats=stats,
            workflow_exec_id=session.workflow_exec_id,
        )
    return RunResult(wall_s=time.perf_counter() - t0, events_emitted=0)
