"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Set PROVTRACE_ACCEPT_FAST=1 to run a scaled-down smoke variant while
developing; the default sizes are the committed criteria.
"""

import hashlib
import random
import signal
import statistics
import threading
import time
from pathlib import Path

import pytest
import requests

import oracles
from acceptance_util import FAST, ServiceProcs, criterion, free_port, spawn, spawn_all, wait_health
from genevents import generate_log, run_pipeline
from genstore import random_pattern, random_triples
from provtrace.bench import experiments
from provtrace.bench.fixture import author_fixture, build_fixture, post_fixture
from provtrace.bench.workload import WorkloadSpec, calibrate_spins_per_ms, run_workload
from provtrace.core.prospective import MlRole
from provtrace.query.engine import NotFound
from provtrace.store.triples import TripleStore
from provtrace.wire.codec import encode_batch
from provtrace.wire.events import CaptureConfig, EventBatch, SpecRef
from provtrace.wire.eventlog import replay_log
from test_store_oracle import compare_case


# ---------------------------------------------------------------------------
# Triple-store oracle equivalence: 500 random (store <= 10k triples,
# pattern <= 4) cases against nested-loop evaluation.
# ---------------------------------------------------------------------------

def test_triple_store_oracle_equivalence():
    n_cases = 60 if FAST else 500
    t0 = time.monotonic()
    cases = 0
    rng_sizes = random.Random(424242)
    while cases < n_cases:
        seed = 50_000 + cases
        rng = random.Random(seed)
        if cases % 50 == 49:
            n, selective = rng_sizes.randint(5000, 10_000), True
        elif cases % 10 == 9:
            n, selective = rng_sizes.randint(500, 2000), True
        else:
            n, selective = rng_sizes.randint(0, 250), False
        triples = random_triples(rng, n, n_subjects=max(2, n // 3))
        store = TripleStore()
        store.insert(triples)
        stored = store.triples()
        pattern = random_pattern(rng, stored, force_selective=selective)
        compare_case(store, stored, pattern)
        cases += 1
    elapsed = time.monotonic() - t0
    criterion(
        "triple-store-oracle-equivalence",
        True,
        f"{cases} random cases matched nested-loop evaluation in {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# Query-oracle equivalence: 200 random multi-workflow event logs; every
# family's answer equals a brute-force computation on the raw event log.
# ---------------------------------------------------------------------------

def _check_log_against_oracle(seed: int) -> int:
    log = generate_log(seed, max_tasks=50, max_workflows=4)
    if not log.batches:
        return 0
    store, engine = run_pipeline(log)
    graph = oracles.replay_events(log.events_by_exec, log.specs_by_exec, completion_order=log.completion_order)
    checks = 0

    models = sorted(
        uri
        for uri, role in graph.value_role.items()
        if role is MlRole.MODEL_REFERENCE and uri in graph.producer_of_value
    )[:6]
    for uri in models:
        assert engine.lineage_backward(uri).node_uris() == oracles.backward_closure(graph, uri)
        checks += 1

    roots = sorted(u for u in graph.value_payload if u not in graph.derived_from)[:4]
    for uri in roots:
        assert engine.lineage_forward(uri).node_uris() == oracles.forward_closure(graph, uri)
        checks += 1

    from provtrace import vocab

    expected_edges = {
        (consumer, producer) for consumer, producers in graph.derived_from.items() for producer in producers
    }
    got_edges = {(t.s.value, t.o.value) for t in store.candidates(None, vocab.DERIVED_FROM, None)}
    assert got_edges == expected_edges
    checks += 1

    scopes = [None] + sorted(log.specs_by_exec)
    for metric in ("loss", "acc"):
        for objective in ("min", "max"):
            for scope in scopes:
                expected = oracles.best_model(graph, metric, objective, scope)
                try:
                    got = engine.best_model(metric, objective, scope)
                except NotFound:
                    assert expected is None
                else:
                    assert (got["model_uri"], got["metric_value"]) == expected
                checks += 1

    for exec_id in sorted(log.specs_by_exec):
        expected = oracles.training_stats(graph, exec_id)
        try:
            got = engine.training_stats(exec_id)
        except NotFound:
            assert expected is None
            checks += 1
            continue
        assert got["count"] == expected["count"]
        for key in ("min_s", "max_s", "avg_s"):
            if expected[key] is None:
                assert got[key] is None
            else:
                assert abs(got[key] - expected[key]) < 1e-9
        checks += 1

    for uri in models:
        raw_expected, external_expected = oracles.domain_trace(graph, uri, log.specs_by_exec)
        got = engine.domain_trace(uri)
        assert {(r["locator"], r["store"]) for r in got["raw_references"]} == set(raw_expected)
        assert {tuple(e) for e in got["external_refs"]} == set(external_expected)
        checks += 1
    return checks


def test_query_oracle_equivalence():
    n_logs = 30 if FAST else 200
    t0 = time.monotonic()
    total_checks = 0
    for seed in range(n_logs):
        total_checks += _check_log_against_oracle(seed)
    elapsed = time.monotonic() - t0
    criterion(
        "query-oracle-equivalence",
        True,
        f"{n_logs} random event logs, {total_checks} family answers matched brute force in {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# Cross-workflow stitching on the 3-phase fixture + double-ingest idempotency.
# ---------------------------------------------------------------------------

def test_fixture_stitching_and_idempotency(tmp_path):
    services = spawn_all(tmp_path, tag="fixture")
    try:
        fixture = build_fixture(services.tracker_endpoint, services.query_endpoint, seed=7)

        reached = []
        for model_uri in fixture.model_uris:
            resp = requests.get(
                services.query_endpoint + "/v1/lineage/backward", params={"uri": model_uri}, timeout=10
            )
            locators = {n["attrs"].get("locator") for n in resp.json()["subgraph"]["nodes"]}
            reached.append(fixture.raw_locator in locators)

        dump_before = requests.get(services.manager_endpoint + "/v1/dump", timeout=10).text
        before = set(dump_before.splitlines())

        for batch in fixture.batches:  # identical replay: every event is a duplicate
            requests.post(
                services.tracker_endpoint + "/v1/capture",
                data=encode_batch(batch),
                headers={"content-type": "application/json"},
                timeout=10,
            ).raise_for_status()
        metrics = requests.get(services.tracker_endpoint + "/v1/metrics", timeout=10).json()
        time.sleep(1.5)  # allow any (unexpected) forwarding to land before re-dumping
        after = set(requests.get(services.manager_endpoint + "/v1/dump", timeout=10).text.splitlines())

        ok = all(reached) and before == after and metrics["dedup_count"] >= sum(len(b.events) for b in fixture.batches)
        criterion(
            "cross-workflow-stitching",
            ok,
            f"{sum(reached)}/{len(reached)} models reach {fixture.raw_locator}; "
            f"graph identical after double ingest ({len(before)} triples)",
        )
    finally:
        services.stop()


# ---------------------------------------------------------------------------
# Event conservation under failure: SIGKILL the tracker mid-run with diskful
# on; after replay, the tracker's ingested id set equals the emitted id set.
# ---------------------------------------------------------------------------

def test_event_conservation_under_tracker_kill(tmp_path):
    manager_port, query_port, tracker_port = free_port(), free_port(), free_port()
    state_dir = tmp_path / "tracker-state"
    manager_proc = spawn(
        ["serve", "manager", "--manager-port", str(manager_port)], tmp_path / "manager.log"
    )
    tracker_args = [
        "serve", "tracker",
        "--tracker-port", str(tracker_port),
        "--manager-port", str(manager_port),
        "--state", str(state_dir),
    ]
    tracker_proc = spawn(tracker_args, tmp_path / "tracker.log")
    tracker_endpoint = f"http://127.0.0.1:{tracker_port}"
    procs = ServiceProcs(procs=[manager_proc, tracker_proc])
    try:
        wait_health(f"http://127.0.0.1:{manager_port}")
        wait_health(tracker_endpoint)
        experiments.register_bench_spec(tracker_endpoint)

        log_path = tmp_path / "diskful.ndjson"
        spec = WorkloadSpec(
            epochs=5 if FAST else 10,
            iterations_per_epoch=20,
            compute_ms=20.0,
            capture=CaptureConfig(
                queue_max_size=16,
                persist_to_disk=True,
                send_online=True,
                tracker_endpoint=tracker_endpoint,
                log_path=str(log_path),
                flush_interval_s=0.2,
            ),
        )

        kill_after_s = spec.iterations * 0.02 * 0.4
        killer = threading.Timer(kill_after_s, lambda: tracker_proc.send_signal(signal.SIGKILL))
        killer.start()
        result = run_workload(spec, keep_ids=True)
        killer.cancel()
        tracker_proc.wait(timeout=10)

        emitted = set(result.stats.emitted_ids)
        replayed = replay_log(log_path)
        logged = {e.event_id for e in replayed}
        assert result.events_emitted == spec.expected_events

        # restart on the same port with the same durable state, then replay
        tracker_proc2 = spawn(tracker_args, tmp_path / "tracker.log")
        procs.procs.append(tracker_proc2)
        wait_health(tracker_endpoint)
        events = sorted(replayed.events, key=lambda e: e.seq_no)
        batch = EventBatch(client_id=events[0].client_id, spec_ref=SpecRef("bench_training", "1"), events=tuple(events))
        resp = requests.post(
            tracker_endpoint + "/v1/capture",
            data=encode_batch(batch),
            headers={"content-type": "application/json"},
            timeout=30,
        )
        resp.raise_for_status()
        digest = requests.get(tracker_endpoint + "/v1/metrics", timeout=10).json()["ingested_ids_digest"]
        expected_digest = hashlib.sha256("\n".join(sorted(emitted)).encode()).hexdigest()

        ok = logged == emitted and digest == expected_digest
        criterion(
            "event-conservation-under-failure",
            ok,
            f"{len(emitted)} events emitted; log carried all through SIGKILL; "
            f"replayed id digest matches ({digest[:12]}…)",
        )
    finally:
        procs.stop()


# ---------------------------------------------------------------------------
# Event-to-queryable latency: p95 over >= 50 probes <= 5 s with queue=50 and
# a 1 s flush timer.
# ---------------------------------------------------------------------------

def test_event_to_queryable_latency(tmp_path):
    services = spawn_all(tmp_path, tag="latency")
    try:
        n_probes = 12 if FAST else 50
        result = experiments.measure_latency(
            services.tracker_endpoint,
            services.query_endpoint,
            n_probes=n_probes,
            queue_size=50,
            flush_interval_s=1.0,
        )
        ok = result.failures == 0 and result.p95_s <= 5.0
        criterion(
            "event-to-queryable-latency",
            ok,
            f"p95={result.p95_s:.2f}s over {len(result.samples_s)} probes "
            f"(failures={result.failures}, bound 5s)",
        )
    finally:
        services.stop()


# ---------------------------------------------------------------------------
# Capture settings: overhead <= 2% at queue=50/diskless/online; queue=1 not
# faster than queue=50; |diskful - diskless| <= 1% of baseline.
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def settings_report(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("settings")
    services = spawn_all(tmp, tag="settings")
    try:
        workload = WorkloadSpec(
            epochs=4 if FAST else 20,
            iterations_per_epoch=30,
            compute_ms=50.0,
            spins_per_ms=calibrate_spins_per_ms(),
        )
        settings = [
            experiments.Setting(queue_size=50, diskful=False, online=True),
            experiments.Setting(queue_size=1, diskful=False, online=True),
            experiments.Setting(queue_size=50, diskful=True, online=True),
        ]
        report = experiments.run_settings_experiment(
            services.tracker_endpoint,
            workload,
            settings=settings,
            repeats=3 if FAST else 12,
            log_dir=tmp / "logs",
        )
        print(report.to_table())
        (tmp / "settings.csv").write_text(report.to_csv(), encoding="utf-8")
        return report
    finally:
        services.stop()


def test_capture_overhead(settings_report):
    baseline = settings_report.baseline_median
    with_capture = settings_report.sample_set("q50-diskless-online").median
    pct = (with_capture - baseline) / baseline * 100
    criterion(
        "capture-overhead",
        pct <= 2.0,
        f"median {with_capture:.2f}s vs baseline {baseline:.2f}s -> {pct:.2f}% (bound 2%)",
    )


def test_queue_size_ordering(settings_report):
    q1 = settings_report.sample_set("q1-diskless-online").median
    q50 = settings_report.sample_set("q50-diskless-online").median
    criterion(
        "queue-size-ordering",
        q1 >= q50,
        f"queue=1 median {q1:.2f}s vs queue=50 median {q50:.2f}s "
        f"(queue=1 is {(q1 - q50) / q50 * 100:+.2f}%)",
    )


def test_diskful_delta(settings_report):
    baseline = settings_report.baseline_median
    diskless = settings_report.sample_set("q50-diskless-online").median
    diskful = settings_report.sample_set("q50-diskful-online").median
    delta_pct = abs(diskful - diskless) / baseline * 100
    criterion(
        "diskful-delta",
        delta_pct <= 1.0,
        f"|{diskful:.2f}s - {diskless:.2f}s| = {delta_pct:.2f}% of baseline (bound 1%)",
    )


# ---------------------------------------------------------------------------
# Weak scalability: for x in {1,2,4,8} parallel workflow processes, the
# median runtime at every x stays within 5% of the x=1 median.
# ---------------------------------------------------------------------------

def test_weak_scalability(tmp_path):
    services = spawn_all(tmp_path, tag="scalability")
    try:
        workload = WorkloadSpec(
            epochs=4 if FAST else 20,
            iterations_per_epoch=30,
            compute_ms=50.0,
            spins_per_ms=calibrate_spins_per_ms(),
        )
        report = experiments.run_scalability_experiment(
            services.tracker_endpoint,
            workload,
            x_values=(1, 2) if FAST else (1, 2, 4, 8),
            repeats=3 if FAST else 10,
        )
        print(report.to_table())
        (tmp_path / "scalability.csv").write_text(report.to_csv(), encoding="utf-8")
        base = report.sample_set("x1").median
        deviations = {
            s.label: abs(s.median - base) / base * 100
            for s in report.sample_sets
        }
        worst = max(deviations.values())
        ok = worst <= 5.0
        criterion(
            "weak-scalability",
            ok,
            "; ".join(f"{label} median dev {dev:.2f}%" for label, dev in sorted(deviations.items()))
            + " (bound 5%)",
        )
    finally:
        services.stop()
