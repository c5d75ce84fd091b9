"""In-process mock of the readings endpoint, with fault injection.

Serves the real wire protocol (POST /v1/readings) plus a /control surface for
tests: fail-next (503s), reject-next (400s), drop-next (connection cut with no
response), latency (per-request delay), store inspection, and reset. Runs a
ThreadingHTTPServer on localhost in a daemon thread.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import NetworkError
from .queue import WIRE_FIELDS

_CONTROL_COUNTERS = ("fail_next", "reject_next", "drop_next")


class MockEndpoint:
    """Readings sink keyed by reading_id; duplicate POSTs ack without storing."""

    def __init__(self, port: int = 0, host: str = "127.0.0.1"):
        self._lock = threading.Lock()
        self.store: dict[str, dict] = {}
        self.faults = {"fail_next": 0, "reject_next": 0, "drop_next": 0,
                       "latency": 0.0, "every_other": False}
        self.request_count = 0
        handler = _make_handler(self)
        try:
            self._server = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            raise NetworkError(f"cannot bind mock endpoint on {host}:{port}: {exc}") from None
        # clients killed mid-request reset connections; not worth a traceback
        self._server.handle_error = lambda *args: None
        # short poll so stop() does not dawdle half a second per endpoint
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.05},
            daemon=True,
        )

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockEndpoint":
        if not self._thread.is_alive() and not self._thread.ident:
            self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "MockEndpoint":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- state used by the handler ------------------------------------------

    def take_fault(self) -> str | None:
        """Consume one pending fault, if any; returns its name."""
        with self._lock:
            for name in _CONTROL_COUNTERS:
                if self.faults[name] > 0:
                    self.faults[name] -= 1
                    return name
        return None

    def accept(self, record: dict) -> tuple[bool, str]:
        """Store a wire record; returns (stored_now, reading_id)."""
        rid = record["reading_id"]
        with self._lock:
            if rid in self.store:
                return False, rid
            self.store[rid] = record
            return True, rid

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "count": len(self.store),
                "ids": list(self.store.keys()),
                "records": list(self.store.values()),
            }

    def reset(self) -> None:
        with self._lock:
            self.store.clear()
            for name in _CONTROL_COUNTERS:
                self.faults[name] = 0
            self.faults["latency"] = 0.0
            self.faults["every_other"] = False
            self.request_count = 0


def mock_endpoint(port: int = 0) -> MockEndpoint:
    """Bind and start a mock endpoint; caller owns stop()."""
    return MockEndpoint(port).start()


def _make_handler(owner: MockEndpoint):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # keep test output quiet
            pass

        def _reply(self, code: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _read_body(self) -> dict | None:
            try:
                length = int(self.headers.get("Content-Length", "0"))
                return json.loads(self.rfile.read(length).decode("utf-8"))
            except (ValueError, json.JSONDecodeError):
                return None

        def _drop(self) -> None:
            try:
                self.connection.shutdown(2)
            except OSError:
                pass
            self.close_connection = True

        def do_POST(self):
            if self.path == "/v1/readings":
                return self._post_reading()
            if self.path.startswith("/control/"):
                return self._control()
            self._reply(404, {"error": f"no such path {self.path}"})

        def do_GET(self):
            if self.path == "/control/store":
                return self._reply(200, owner.snapshot())
            self._reply(404, {"error": f"no such path {self.path}"})

        def _post_reading(self):
            latency = owner.faults["latency"]
            if latency > 0:
                time.sleep(latency)
            with owner._lock:
                owner.request_count += 1
                count = owner.request_count
            if owner.faults["every_other"] and count % 2 == 1:
                return self._reply(503, {"error": "injected alternating failure"})
            fault = owner.take_fault()
            if fault == "fail_next":
                return self._reply(503, {"error": "injected transient failure"})
            if fault == "reject_next":
                return self._reply(400, {"error": "injected permanent rejection"})
            if fault == "drop_next":
                return self._drop()
            body = self._read_body()
            if body is None:
                return self._reply(400, {"error": "body is not valid JSON"})
            extra = set(body) - set(WIRE_FIELDS)
            missing = set(WIRE_FIELDS) - set(body)
            if extra or missing:
                return self._reply(400, {
                    "error": f"bad fields: extra {sorted(extra)}, missing {sorted(missing)}"
                })
            if not isinstance(body["glucose_mgdl"], (int, float)) or body["glucose_mgdl"] <= 0:
                return self._reply(400, {"error": "glucose_mgdl must be a positive number"})
            _, rid = owner.accept(body)
            self._reply(200, {"ack": rid})

        def _control(self):
            body = self._read_body() or {}
            name = self.path[len("/control/"):]
            if name == "reset":
                owner.reset()
                return self._reply(200, {"ok": True})
            if name == "latency":
                owner.faults["latency"] = float(body.get("seconds", 0.0))
                return self._reply(200, {"ok": True})
            if name == "fail-every-other":
                owner.faults["every_other"] = bool(body.get("enabled", True))
                return self._reply(200, {"ok": True})
            key = name.replace("-", "_")
            if key in _CONTROL_COUNTERS:
                owner.faults[key] += int(body.get("count", 1))
                return self._reply(200, {"ok": True})
            self._reply(404, {"error": f"no such control {name!r}"})

    return Handler
