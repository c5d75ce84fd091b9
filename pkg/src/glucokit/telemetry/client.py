"""At-least-once uploader over HTTP; the endpoint dedupes on reading_id.

Transient failures (5xx, dropped connections, timeouts) back off exponentially
with jitter and retry up to max_attempts; 4xx responses are permanent and send
the record to the dead-letter log. Sleeping and randomness are injectable so
tests run instantly and deterministically.
"""

from __future__ import annotations

import json
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NetworkError
from .queue import ReadingRecord, UploadQueue


@dataclass(frozen=True)
class RetryPolicy:
    base_delay: float = 0.1
    max_delay: float = 2.0
    jitter: float = 0.1  # fractional; delay *= 1 + jitter*U(-1, 1)
    max_attempts: int = 6

    def __post_init__(self):
        if self.base_delay <= 0 or self.max_delay < self.base_delay:
            raise DataError("need 0 < base_delay <= max_delay")
        if not 0 <= self.jitter <= 1:
            raise DataError("jitter must be in [0, 1]")
        if self.max_attempts < 1:
            raise DataError("max_attempts must be >= 1")

    def delay(self, attempt: int, rng: np.random.Generator) -> float:
        base = min(self.base_delay * (2.0 ** attempt), self.max_delay)
        return base * (1.0 + self.jitter * float(rng.uniform(-1.0, 1.0)))


@dataclass(frozen=True)
class SyncStats:
    uploaded: int
    dead_lettered: int
    remaining: int
    attempts: int

    def drained(self) -> bool:
        return self.remaining == 0


class _Transient(Exception):
    """Retryable upload failure (5xx, connection trouble, timeout)."""


def _post_record(endpoint: str, record: ReadingRecord, timeout: float) -> str:
    body = json.dumps(record.to_wire()).encode("utf-8")
    req = urllib.request.Request(
        endpoint.rstrip("/") + "/v1/readings",
        data=body,
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        detail = ""
        try:
            detail = exc.read().decode("utf-8", "replace")[:200]
        except OSError:
            pass
        if 400 <= exc.code < 500:
            raise NetworkError(f"HTTP {exc.code}: {detail or exc.reason}") from None
        raise _Transient(f"HTTP {exc.code}: {detail or exc.reason}") from None
    except (urllib.error.URLError, ConnectionError, TimeoutError, OSError) as exc:
        raise _Transient(str(exc)) from None
    ack = payload.get("ack") if isinstance(payload, dict) else None
    if ack != record.reading_id:
        raise _Transient(f"endpoint acked {ack!r}, expected {record.reading_id!r}")
    return ack


def sync(queue: UploadQueue, endpoint: str, retry: RetryPolicy | None = None, *,
         timeout: float = 10.0, sleep_fn=time.sleep,
         rng: np.random.Generator | None = None) -> SyncStats:
    """Upload every pending record in order; partial progress is durable.

    Stops early when one record exhausts its attempts (the endpoint is
    presumed down); whatever was acknowledged stays acknowledged.
    """
    retry = retry or RetryPolicy()
    rng = rng or np.random.default_rng()
    uploaded = dead = attempts_total = 0
    records = queue.pending()
    for idx, record in enumerate(records):
        done = False
        for attempt in range(retry.max_attempts):
            attempts_total += 1
            try:
                _post_record(endpoint, record, timeout)
            except NetworkError as exc:
                queue.mark_dead(record, str(exc))
                dead += 1
                done = True
                break
            except _Transient:
                if attempt + 1 < retry.max_attempts:
                    sleep_fn(retry.delay(attempt, rng))
                continue
            queue.mark_acked(record.reading_id)
            uploaded += 1
            done = True
            break
        if not done:
            return SyncStats(
                uploaded=uploaded,
                dead_lettered=dead,
                remaining=len(records) - idx,
                attempts=attempts_total,
            )
    return SyncStats(uploaded=uploaded, dead_lettered=dead, remaining=0,
                     attempts=attempts_total)
