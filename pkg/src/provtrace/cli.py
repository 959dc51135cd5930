"""provtrace command line: serve services, run benchmarks, build fixtures, query."""

from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
from pathlib import Path

import requests

from provtrace.config import Config, load_config


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to provtrace.toml")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="provtrace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run services")
    serve.add_argument("what", choices=["tracker", "manager", "query", "all"])
    _add_common(serve)
    serve.add_argument("--tracker-port", type=int)
    serve.add_argument("--manager-port", type=int)
    serve.add_argument("--query-port", type=int)
    serve.add_argument("--store", help="triple store directory (manager/query durability)")
    serve.add_argument("--state", help="tracker state directory")

    bench = sub.add_parser("bench", help="run experiments")
    bench.add_argument("experiment", choices=["settings", "scalability", "latency"])
    _add_common(bench)
    bench.add_argument("--endpoint", help="tracker endpoint (default from config)")
    bench.add_argument("--query-endpoint", help="query endpoint (default from config)")
    bench.add_argument("--repeats", type=int)
    bench.add_argument("--epochs", type=int)
    bench.add_argument("--iterations", type=int)
    bench.add_argument("--compute-ms", type=float)
    bench.add_argument("--queue-size", help="comma-separated queue sizes (settings) or one size (latency)")
    bench.add_argument("--diskful", metavar="DIR", help="directory for diskful logs")
    bench.add_argument("--offline", action="store_true", help="restrict settings to offline-capable combinations")
    bench.add_argument("--max-parallel", type=int, default=8)
    bench.add_argument("--probes", type=int, default=50)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--out", default="bench_out", help="directory for CSV reports")
    bench.add_argument("--full-profile", action="store_true",
                       help="use the large workload (250 epochs x 30 iterations, ~15000 events)")

    fixture = sub.add_parser("fixture", help="canned 3-phase lifecycle")
    fixture.add_argument("action", choices=["build"])
    _add_common(fixture)
    fixture.add_argument("--endpoint", help="tracker endpoint")
    fixture.add_argument("--query-endpoint")
    fixture.add_argument("--seed", type=int, default=7)

    query = sub.add_parser("query", help="query the provenance graph")
    _add_common(query)
    query.add_argument("--query-endpoint", help="query service endpoint")
    qsub = query.add_subparsers(dest="family", required=True)

    best = qsub.add_parser("best-model")
    best.add_argument("--metric", required=True)
    group = best.add_mutually_exclusive_group()
    group.add_argument("--min", dest="objective", action="store_const", const="min", default="min")
    group.add_argument("--max", dest="objective", action="store_const", const="max")
    best.add_argument("--scope")

    lineage = qsub.add_parser("lineage")
    lineage.add_argument("--uri", required=True)
    direction = lineage.add_mutually_exclusive_group()
    direction.add_argument("--backward", dest="direction", action="store_const", const="backward", default="backward")
    direction.add_argument("--forward", dest="direction", action="store_const", const="forward")
    lineage.add_argument("--stop", default="", help="comma-separated class IRIs that halt expansion")

    stats = qsub.add_parser("stats")
    stats.add_argument("--exec-id", required=True)

    trace = qsub.add_parser("domain-trace")
    trace.add_argument("--uri", required=True)

    raw = qsub.add_parser("raw")
    raw.add_argument("text", nargs="?", help="query text (omit with -f)")
    raw.add_argument("-f", "--file", help="read query text from a file")

    return parser


def cmd_serve(args, config: Config) -> int:
    from provtrace import serve as serving

    if args.tracker_port is not None:
        config.tracker.port = args.tracker_port
    if args.manager_port is not None:
        config.manager.port = args.manager_port
    if args.query_port is not None:
        config.query.port = args.query_port
    if args.store:
        config.manager.store_path = args.store
    if args.state:
        config.tracker.state_path = args.state

    if args.what == "all":
        handles = serving.serve_all(config)
    elif args.what == "tracker":
        handles = [serving.serve_tracker(config)]
    elif args.what == "manager":
        handles = [serving.serve_manager(config)]
    else:
        handles = [serving.serve_query(config)]

    for handle in handles:
        print(f"{handle.name} listening on port {handle.port}", flush=True)

    stop = threading.Event()

    def _signal(_sig, _frame):
        stop.set()

    signal.signal(signal.SIGINT, _signal)
    signal.signal(signal.SIGTERM, _signal)
    stop.wait()
    serving.stop_all(handles)
    return 0


def _workload_from_args(args, config: Config):
    from provtrace.bench.workload import WorkloadSpec

    if args.full_profile:
        epochs, iterations = 250, 30
    else:
        epochs, iterations = config.bench.epochs, config.bench.iterations
    return WorkloadSpec(
        epochs=args.epochs or epochs,
        iterations_per_epoch=args.iterations or iterations,
        compute_ms=args.compute_ms or config.bench.compute_ms,
    )


def cmd_bench(args, config: Config) -> int:
    from provtrace.bench import experiments

    tracker_endpoint = args.endpoint or config.tracker_endpoint
    query_endpoint = args.query_endpoint or config.query_endpoint
    repeats = args.repeats or config.bench.repeats
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    progress = lambda msg: print(msg, file=sys.stderr, flush=True)

    if args.experiment == "settings":
        queue_sizes = tuple(int(q) for q in (args.queue_size or "1,50").split(","))
        settings = experiments.all_settings(queue_sizes)
        if args.offline:
            settings = [s for s in settings if not s.online]
        report = experiments.run_settings_experiment(
            tracker_endpoint,
            _workload_from_args(args, config),
            settings=settings,
            repeats=repeats,
            log_dir=Path(args.diskful) if args.diskful else out_dir / "logs",
            progress=progress,
        )
        (out_dir / "settings.csv").write_text(report.to_csv(), encoding="utf-8")
        print(report.to_table())
        return 0

    if args.experiment == "scalability":
        x_values = []
        x = 1
        while x <= args.max_parallel:
            x_values.append(x)
            x *= 2
        report = experiments.run_scalability_experiment(
            tracker_endpoint,
            _workload_from_args(args, config),
            x_values=tuple(x_values),
            repeats=repeats,
            progress=progress,
        )
        (out_dir / "scalability.csv").write_text(report.to_csv(), encoding="utf-8")
        print(report.to_table())
        return 0

    queue_size = int(args.queue_size) if args.queue_size else 50
    result = experiments.measure_latency(
        tracker_endpoint, query_endpoint, n_probes=args.probes, queue_size=queue_size, progress=progress
    )
    (out_dir / "latency.csv").write_text(
        "probe,latency_s\n" + "\n".join(f"{i},{v:.4f}" for i, v in enumerate(result.samples_s)) + "\n",
        encoding="utf-8",
    )
    print(json.dumps(result.to_obj(), indent=2))
    return 0 if result.failures == 0 else 1


def cmd_fixture(args, config: Config) -> int:
    from provtrace.bench.fixture import build_fixture

    fixture = build_fixture(
        args.endpoint or config.tracker_endpoint,
        args.query_endpoint or config.query_endpoint,
        seed=args.seed,
    )
    print(json.dumps(fixture.to_obj(), indent=2))
    return 0


def cmd_query(args, config: Config) -> int:
    base = (args.query_endpoint or config.query_endpoint).rstrip("/")
    if args.family == "best-model":
        params = {"metric": args.metric, "objective": args.objective}
        if args.scope:
            params["scope"] = args.scope
        resp = requests.get(f"{base}/v1/models/best", params=params, timeout=30)
    elif args.family == "lineage":
        path = "backward" if args.direction == "backward" else "forward"
        params = {"uri": args.uri}
        if args.direction == "backward" and args.stop:
            params["stop"] = args.stop
        resp = requests.get(f"{base}/v1/lineage/{path}", params=params, timeout=30)
    elif args.family == "stats":
        resp = requests.get(f"{base}/v1/executions/{args.exec_id}/training-stats", timeout=30)
    elif args.family == "domain-trace":
        resp = requests.get(f"{base}/v1/models/{args.uri}/domain-trace", timeout=30)
    else:
        text = Path(args.file).read_text(encoding="utf-8") if args.file else (args.text or "")
        if not text.strip():
            print("raw query needs text or -f FILE", file=sys.stderr)
            return 2
        resp = requests.post(f"{base}/v1/query", json={"text": text}, timeout=30)
    print(json.dumps(resp.json(), indent=2))
    return 0 if resp.status_code == 200 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(getattr(args, "config", None))
    if args.command == "serve":
        return cmd_serve(args, config)
    if args.command == "bench":
        return cmd_bench(args, config)
    if args.command == "fixture":
        return cmd_fixture(args, config)
    return cmd_query(args, config)


if __name__ == "__main__":
    sys.exit(main())
