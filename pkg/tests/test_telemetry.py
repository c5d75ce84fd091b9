"""Durable queue semantics, retry policy, and sync against the mock endpoint."""

import json
import os
import urllib.request

import numpy as np
import pytest

from glucokit.data import GlucoseValue
from glucokit.errors import DataError
from glucokit.telemetry import (
    MockEndpoint,
    ReadingRecord,
    RetryPolicy,
    SyncStats,
    UploadQueue,
    sync,
)
from glucokit.telemetry.queue import QUEUE_LOG, WIRE_FIELDS


def record(i, device="dev-1", patient="p-1", minute=None):
    return ReadingRecord(
        reading_id=f"r-{i:04d}",
        patient_id=patient,
        timestamp_utc=f"2026-02-01T08:{minute if minute is not None else i:02d}:00Z",
        glucose=GlucoseValue(100.0 + i, "capillary"),
        model_tag="mpr3:capillary",
        device_id=device,
    )


def no_sleep(_):
    pass


class TestReadingRecord:
    def test_wire_round_trip(self):
        r = record(3)
        assert ReadingRecord.from_wire(r.to_wire()) == r
        assert set(r.to_wire()) == set(WIRE_FIELDS)

    def test_extra_wire_field_rejected(self):
        d = record(0).to_wire()
        d["shoe_size"] = 42
        with pytest.raises(DataError, match="extra"):
            ReadingRecord.from_wire(d)

    def test_missing_wire_field_rejected(self):
        d = record(0).to_wire()
        del d["device_id"]
        with pytest.raises(DataError, match="missing"):
            ReadingRecord.from_wire(d)

    def test_bad_glucose_kind_rejected(self):
        d = record(0).to_wire()
        d["glucose_kind"] = "plasma"
        with pytest.raises(DataError, match="glucose_kind"):
            ReadingRecord.from_wire(d)

    @pytest.mark.parametrize("ts", [
        "2026-02-01 08:00:00",       # missing T/Z
        "2026-02-01T08:00:00+00:00", # offset form not accepted
        "2026-2-1T08:00:00Z",        # unpadded
    ])
    def test_timestamp_shape_enforced(self, ts):
        with pytest.raises(DataError, match="timestamp"):
            ReadingRecord(
                reading_id="r-1", patient_id="p-1", timestamp_utc=ts,
                glucose=GlucoseValue(100.0, "capillary"),
                model_tag="t", device_id="d",
            )

    def test_empty_identifier_rejected(self):
        with pytest.raises(DataError, match="device_id"):
            ReadingRecord(
                reading_id="r-1", patient_id="p-1",
                timestamp_utc="2026-02-01T08:00:00Z",
                glucose=GlucoseValue(100.0, "capillary"),
                model_tag="t", device_id="",
            )


class TestUploadQueue:
    def test_enqueue_preserves_order(self, tmp_path):
        with UploadQueue(tmp_path / "q") as q:
            for i in range(5):
                q.enqueue(record(i))
            assert [r.reading_id for r in q.pending()] == [f"r-{i:04d}" for i in range(5)]
            assert q.pending_count() == 5

    def test_duplicate_id_rejected(self, tmp_path):
        with UploadQueue(tmp_path / "q") as q:
            q.enqueue(record(1))
            with pytest.raises(DataError, match="already enqueued"):
                q.enqueue(record(1))

    def test_per_device_timestamps_must_not_regress(self, tmp_path):
        with UploadQueue(tmp_path / "q") as q:
            q.enqueue(record(1, minute=30))
            with pytest.raises(DataError, match="precedes"):
                q.enqueue(record(2, minute=10))
            q.enqueue(record(3, device="dev-2", minute=10))  # other device is fine
            q.enqueue(record(4, minute=30))  # equal timestamp is fine

    def test_ack_is_idempotent_and_durable(self, tmp_path):
        d = tmp_path / "q"
        with UploadQueue(d) as q:
            q.enqueue(record(1))
            q.enqueue(record(2))
            q.mark_acked("r-0001")
            q.mark_acked("r-0001")
            assert q.acked_count() == 1
            assert [r.reading_id for r in q.pending()] == ["r-0002"]
        with UploadQueue(d) as q:
            assert [r.reading_id for r in q.pending()] == ["r-0002"]
            assert q.acked_count() == 1

    def test_dead_letter_removes_from_pending(self, tmp_path):
        with UploadQueue(tmp_path / "q") as q:
            q.enqueue(record(1))
            q.mark_dead(q.pending()[0], "HTTP 400: rejected")
            assert q.pending() == []
            [(r, reason)] = q.dead_letters()
            assert r.reading_id == "r-0001" and "400" in reason

    def test_reopen_preserves_log_bytes(self, tmp_path):
        d = tmp_path / "q"
        with UploadQueue(d) as q:
            for i in range(4):
                q.enqueue(record(i))
        before = (d / QUEUE_LOG).read_bytes()
        with UploadQueue(d) as q:
            assert q.pending_count() == 4
        assert (d / QUEUE_LOG).read_bytes() == before

    def test_torn_final_line_is_dropped(self, tmp_path):
        d = tmp_path / "q"
        with UploadQueue(d) as q:
            q.enqueue(record(1))
            q.enqueue(record(2))
        with open(d / QUEUE_LOG, "ab") as fh:
            fh.write(b'{"reading_id": "r-9999", "patient')  # crash mid-write
        with UploadQueue(d) as q:
            assert [r.reading_id for r in q.pending()] == ["r-0001", "r-0002"]

    def test_interior_corruption_is_an_error(self, tmp_path):
        d = tmp_path / "q"
        with UploadQueue(d) as q:
            q.enqueue(record(1))
            q.enqueue(record(2))
        lines = (d / QUEUE_LOG).read_bytes().splitlines(keepends=True)
        (d / QUEUE_LOG).write_bytes(lines[0] + b"garbage\n" + lines[1])
        with pytest.raises(DataError, match="line 2"):
            UploadQueue(d)

    def test_compact_drops_settled_records(self, tmp_path):
        d = tmp_path / "q"
        with UploadQueue(d) as q:
            for i in range(4):
                q.enqueue(record(i))
            q.mark_acked("r-0000")
            q.mark_dead(q.pending()[0], "HTTP 400: bad")
            q.compact()
            assert [r.reading_id for r in q.pending()] == ["r-0002", "r-0003"]
            assert q.acked_count() == 0
        lines = (d / QUEUE_LOG).read_text().splitlines()
        assert [json.loads(l)["reading_id"] for l in lines] == ["r-0002", "r-0003"]
        assert os.path.getsize(d / "acked.log") == 0
        assert "r-0001" in (d / "deadletter.log").read_text()

    def test_known_ids(self, tmp_path):
        with UploadQueue(tmp_path / "q") as q:
            q.enqueue(record(1))
            q.enqueue(record(2))
            assert q.known_ids() == {"r-0001", "r-0002"}


class TestRetryPolicy:
    def test_delay_doubles_up_to_cap(self):
        p = RetryPolicy(base_delay=0.1, max_delay=1.0, jitter=0.0, max_attempts=8)
        rng = np.random.default_rng(0)
        got = [p.delay(a, rng) for a in range(6)]
        assert got == pytest.approx([0.1, 0.2, 0.4, 0.8, 1.0, 1.0])

    def test_jitter_stays_within_band(self):
        p = RetryPolicy(base_delay=0.2, max_delay=2.0, jitter=0.25, max_attempts=5)
        rng = np.random.default_rng(42)
        for a in range(5):
            base = min(0.2 * 2.0 ** a, 2.0)
            for _ in range(50):
                d = p.delay(a, rng)
                assert base * 0.75 <= d <= base * 1.25

    @pytest.mark.parametrize("kwargs", [
        {"base_delay": 0.0},
        {"base_delay": 2.0, "max_delay": 1.0},
        {"jitter": 1.5},
        {"max_attempts": 0},
    ])
    def test_invalid_policy_rejected(self, kwargs):
        with pytest.raises(DataError):
            RetryPolicy(**kwargs)


@pytest.fixture()
def endpoint():
    with MockEndpoint() as ep:
        yield ep


@pytest.fixture()
def queue(tmp_path):
    with UploadQueue(tmp_path / "q") as q:
        yield q


class TestSync:
    def fill(self, q, n):
        for i in range(n):
            q.enqueue(record(i))

    def test_drains_in_order(self, queue, endpoint):
        self.fill(queue, 3)
        stats = sync(queue, endpoint.url, sleep_fn=no_sleep)
        assert stats == SyncStats(uploaded=3, dead_lettered=0, remaining=0, attempts=3)
        assert stats.drained()
        assert endpoint.snapshot()["ids"] == ["r-0000", "r-0001", "r-0002"]
        assert queue.pending() == []

    def test_sync_never_rewrites_queue_log(self, tmp_path, endpoint):
        d = tmp_path / "q"
        with UploadQueue(d) as q:
            self.fill(q, 3)
            before = (d / QUEUE_LOG).read_bytes()
            sync(q, endpoint.url, sleep_fn=no_sleep)
        assert (d / QUEUE_LOG).read_bytes() == before

    def test_duplicate_upload_acks_without_storing(self, tmp_path, endpoint):
        for sub in ("a", "b"):
            with UploadQueue(tmp_path / sub) as q:
                self.fill(q, 2)
                stats = sync(q, endpoint.url, sleep_fn=no_sleep)
                assert stats.uploaded == 2
        assert endpoint.snapshot()["count"] == 2

    def test_transient_failure_retries(self, queue, endpoint):
        self.fill(queue, 2)
        endpoint.faults["fail_next"] = 1
        stats = sync(queue, endpoint.url, sleep_fn=no_sleep)
        assert stats.uploaded == 2 and stats.attempts == 3
        assert endpoint.snapshot()["count"] == 2

    def test_dropped_connection_retries(self, queue, endpoint):
        self.fill(queue, 1)
        endpoint.faults["drop_next"] = 1
        stats = sync(queue, endpoint.url, sleep_fn=no_sleep)
        assert stats.uploaded == 1 and stats.attempts == 2

    def test_permanent_rejection_dead_letters(self, queue, endpoint):
        queue.enqueue(record(0))
        stats0 = sync(queue, endpoint.url, sleep_fn=no_sleep)
        assert stats0.uploaded == 1
        endpoint.faults["reject_next"] = 1
        queue.enqueue(record(1))
        queue.enqueue(record(2))
        stats = sync(queue, endpoint.url, sleep_fn=no_sleep)
        assert stats == SyncStats(uploaded=1, dead_lettered=1, remaining=0, attempts=2)
        [(dead, reason)] = queue.dead_letters()
        assert dead.reading_id == "r-0001"
        assert reason.startswith("HTTP 400")
        assert endpoint.snapshot()["ids"] == ["r-0000", "r-0002"]

    def test_alternating_failures_still_drain(self, queue, endpoint):
        self.fill(queue, 2)
        endpoint.faults["every_other"] = True
        stats = sync(queue, endpoint.url,
                     RetryPolicy(max_attempts=2, jitter=0.0), sleep_fn=no_sleep)
        assert stats.uploaded == 2 and stats.attempts == 4

    def test_exhausted_attempts_stop_early(self, queue, endpoint):
        self.fill(queue, 3)
        endpoint.faults["fail_next"] = 99
        stats = sync(queue, endpoint.url,
                     RetryPolicy(max_attempts=3, jitter=0.0), sleep_fn=no_sleep)
        assert stats == SyncStats(uploaded=0, dead_lettered=0, remaining=3, attempts=3)
        assert not stats.drained()
        assert queue.pending_count() == 3

    def test_endpoint_down_leaves_queue_intact(self, queue):
        self.fill(queue, 2)
        stats = sync(queue, "http://127.0.0.1:9",  # discard port, nothing listens
                     RetryPolicy(max_attempts=2, jitter=0.0), sleep_fn=no_sleep)
        assert stats.uploaded == 0 and stats.remaining == 2
        assert queue.pending_count() == 2

    def test_sleep_sequence_is_seeded(self, tmp_path, endpoint):
        endpoint.faults["fail_next"] = 4
        delays = {}
        for run in ("x", "y"):
            with UploadQueue(tmp_path / run) as q:
                q.enqueue(record(0))
                endpoint.faults["fail_next"] = 2
                seen = []
                sync(q, endpoint.url, RetryPolicy(jitter=0.5),
                     sleep_fn=seen.append, rng=np.random.default_rng(11))
                delays[run] = seen
        assert delays["x"] == delays["y"] and len(delays["x"]) == 2

    def test_control_surface_over_http(self, queue, endpoint):
        queue.enqueue(record(0))
        req = urllib.request.Request(
            endpoint.url + "/control/fail-next",
            data=json.dumps({"count": 1}).encode(), method="POST",
            headers={"Content-Type": "application/json"},
        )
        with urllib.request.urlopen(req) as resp:
            assert json.loads(resp.read())["ok"] is True
        stats = sync(queue, endpoint.url, sleep_fn=no_sleep)
        assert stats.uploaded == 1 and stats.attempts == 2
        with urllib.request.urlopen(endpoint.url + "/control/store") as resp:
            body = json.loads(resp.read())
        assert body["count"] == 1 and body["ids"] == ["r-0000"]
