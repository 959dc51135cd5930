import json
import threading
import time

import pytest

from provtrace_client import CaptureConfig, CaptureError, SessionStartupError, config_from_env, open_session
from provtrace_client.log import replay_event_log
from provtrace_client.session import reference


def offline_config(tmp_path, queue=8):
    return CaptureConfig(
        queue_max_size=queue,
        persist_to_disk=True,
        send_online=False,
        log_path=str(tmp_path / "events.ndjson"),
        flush_interval_s=0.1,
    )


def test_offline_session_logs_everything(spec_file, tmp_path):
    session = open_session(spec_file, offline_config(tmp_path))
    handle = session.prov_in("training", {"epochs": 300, "learning_rate": 0.001})
    assert handle.task_seq == 0
    session.prov_out(handle, {"loss": 0.07, "model": reference("fs", "/data/m.pt")})
    counters = session.close()
    assert counters.emitted == 2
    assert counters.lost == 0
    events = replay_event_log(tmp_path / "events.ndjson")
    assert [e["kind"] for e in events] == ["task_begin", "task_end"]
    assert events[0]["seq_no"] == 0 and events[1]["seq_no"] == 1
    assert events[1]["attributes"]["model"] == {"store_id": "fs", "locator": "/data/m.pt"}


def test_unknown_transformation_fails_fast(spec_file, tmp_path):
    session = open_session(spec_file, offline_config(tmp_path))
    with pytest.raises(CaptureError, match="unknown transformation"):
        session.prov_in("trainX", {})
    session.close()


def test_unknown_attribute_warns_and_passes_through(spec_file, tmp_path, caplog):
    session = open_session(spec_file, offline_config(tmp_path))
    with caplog.at_level("WARNING", logger="provtrace_client"):
        handle = session.prov_in("training", {"learning_rate": 0.1, "surprise": 42})
    assert any("surprise" in r.message for r in caplog.records)
    session.prov_out(handle, {"loss": 1.0})
    session.close()
    events = replay_event_log(tmp_path / "events.ndjson")
    assert events[0]["attributes"]["surprise"] == 42


def test_double_close_and_foreign_handle(spec_file, tmp_path):
    session = open_session(spec_file, offline_config(tmp_path))
    handle = session.prov_in("training", {})
    session.prov_out(handle, {})
    with pytest.raises(CaptureError, match="already ended"):
        session.prov_out(handle, {})
    import dataclasses

    fake = dataclasses.replace(handle, task_seq=99, closed=False)
    with pytest.raises(CaptureError, match="not opened"):
        session.prov_out(fake, {})
    session.close()


def test_task_context_manager(spec_file, tmp_path):
    with open_session(spec_file, offline_config(tmp_path)) as session:
        with session.task("train_iteration", {"epoch": 0}) as outputs:
            outputs["iter_loss"] = 0.5
    events = replay_event_log(tmp_path / "events.ndjson")
    assert events[1]["attributes"] == {"iter_loss": 0.5}


def test_close_on_empty_session_is_noop(spec_file, tmp_path):
    session = open_session(spec_file, offline_config(tmp_path))
    counters = session.close()
    assert counters.emitted == 0
    assert session.close().emitted == 0  # idempotent


def test_invalid_spec_lists_violations(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        json.dumps(
            {
                "workflow_name": "w",
                "version": "1",
                "transformations": [{"name": "t"}, {"name": "t"}],
            }
        ),
        encoding="utf-8",
    )
    with pytest.raises(Exception, match="duplicate transformation"):
        open_session(path, CaptureConfig(send_online=False, persist_to_disk=True, log_path=str(tmp_path / "l")))


def test_online_only_unreachable_tracker_is_startup_error(spec_file):
    config = CaptureConfig(send_online=True, tracker_endpoint="http://127.0.0.1:9")  # port 9: discard
    with pytest.raises(SessionStartupError, match="unreachable"):
        open_session(spec_file, config)


def test_degraded_session_when_diskful(spec_file, tmp_path, caplog):
    config = CaptureConfig(
        send_online=True,
        persist_to_disk=True,
        log_path=str(tmp_path / "events.ndjson"),
        tracker_endpoint="http://127.0.0.1:9",
        flush_interval_s=0.1,
    )
    with caplog.at_level("WARNING", logger="provtrace_client"):
        session = open_session(spec_file, config)
    assert session.degraded
    assert any("degraded" in r.message for r in caplog.records)
    handle = session.prov_in("training", {})
    session.prov_out(handle, {"loss": 0.5})
    counters = session.close()
    assert counters.lost == 0
    assert len(replay_event_log(tmp_path / "events.ndjson")) == 2


def test_payload_validation(spec_file, tmp_path):
    session = open_session(spec_file, offline_config(tmp_path))
    with pytest.raises(CaptureError, match="non-finite"):
        session.prov_in("training", {"learning_rate": float("nan")})
    with pytest.raises(CaptureError, match="store_id and locator"):
        session.prov_in("training", {"learning_rate": {"store": "x"}})
    session.close()


def test_queue_blocks_instead_of_dropping(spec_file, tmp_path):
    # tiny queue + slow flusher: all events still arrive, producer just waits
    config = CaptureConfig(
        queue_max_size=1,
        persist_to_disk=True,
        send_online=False,
        log_path=str(tmp_path / "events.ndjson"),
        flush_interval_s=0.05,
    )
    session = open_session(spec_file, config)
    for i in range(20):
        handle = session.prov_in("train_iteration", {"epoch": i})
        session.prov_out(handle, {"iter_loss": float(i)})
    counters = session.close()
    assert counters.emitted == 40
    assert len(replay_event_log(tmp_path / "events.ndjson")) == 40


def test_kill_flusher_mid_run_recovers_completed_events(spec_file, tmp_path):
    # simulate a workflow crash: events drained so far are replayable
    session = open_session(spec_file, offline_config(tmp_path, queue=4))
    for i in range(6):
        handle = session.prov_in("train_iteration", {"epoch": i})
        session.prov_out(handle, {"iter_loss": 0.1})
    session.flush()
    # hard-stop without close(): whatever was flushed is durable
    session._closing.set()
    session._wake.set()
    time.sleep(0.2)
    events = replay_event_log(tmp_path / "events.ndjson")
    assert len(events) >= 12  # all completed (flushed) events recovered
    assert all(e["workflow_exec_id"] == session.workflow_exec_id for e in events)


def test_env_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("PROVTRACE_ENDPOINT", "http://tracker.internal:7777")
    monkeypatch.setenv("PROVTRACE_QUEUE_SIZE", "5")
    monkeypatch.setenv("PROVTRACE_DISKFUL", str(tmp_path / "log.ndjson"))
    monkeypatch.setenv("PROVTRACE_ONLINE", "0")
    config = config_from_env(CaptureConfig())
    assert config.tracker_endpoint == "http://tracker.internal:7777"
    assert config.queue_max_size == 5
    assert config.persist_to_disk and config.log_path.endswith("log.ndjson")
    assert config.send_online is False


def test_config_invariants(tmp_path):
    with pytest.raises(ValueError):
        CaptureConfig(send_online=False, persist_to_disk=False)
    with pytest.raises(ValueError):
        CaptureConfig(queue_max_size=0)
    with pytest.raises(ValueError):
        CaptureConfig(persist_to_disk=True)


def test_concurrent_producers_share_one_session(spec_file, tmp_path):
    session = open_session(spec_file, offline_config(tmp_path, queue=16))
    errors = []

    def worker(k):
        try:
            for i in range(10):
                handle = session.prov_in("train_iteration", {"epoch": k * 100 + i})
                session.prov_out(handle, {"iter_loss": 0.5})
        except Exception as exc:
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(k,)) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    counters = session.close()
    assert counters.emitted == 80
    events = replay_event_log(tmp_path / "events.ndjson")
    assert len(events) == 80
    seqs = [e["seq_no"] for e in events]
    assert sorted(seqs) == list(range(80))  # monotone counters, no duplicates
    assert len({e["task_seq"] for e in events}) == 40
