"""A minimal in-process Docker Engine API stand-in for exercising the
container executor without a real daemon. Records every request so tests can
assert on create payloads, uploaded archives, and teardown behavior.
"""

from __future__ import annotations

import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from patchwright.sandbox import demultiplex_logs  # noqa: F401  (re-export convenience)


def multiplex(stdout: bytes, stderr: bytes) -> bytes:
    out = b""
    if stdout:
        out += bytes([1, 0, 0, 0]) + len(stdout).to_bytes(4, "big") + stdout
    if stderr:
        out += bytes([2, 0, 0, 0]) + len(stderr).to_bytes(4, "big") + stderr
    return out


@dataclass
class FakeContainer:
    container_id: str
    create_body: dict
    archive: bytes = b""
    started: bool = False
    removed: bool = False
    killed: bool = False


@dataclass
class FakeDockerDaemon:
    """Behavior is driven by a `script` callable: (create_body, archive_bytes)
    -> dict with keys exit_code, stdout, stderr, wait_delay, oom.
    """

    images: set = field(default_factory=lambda: {"python:3.10-slim"})
    script: object = None
    containers: dict = field(default_factory=dict)
    requests: list = field(default_factory=list)

    def default_script(self, body, archive):
        return {"exit_code": 0, "stdout": b"1 passed\n", "stderr": b"", "wait_delay": 0.0, "oom": False}

    def outcome_for(self, container: FakeContainer) -> dict:
        script = self.script or self.default_script
        result = script(container.create_body, container.archive)
        defaults = {"exit_code": 0, "stdout": b"", "stderr": b"", "wait_delay": 0.0, "oom": False}
        defaults.update(result)
        return defaults


class _Handler(BaseHTTPRequestHandler):
    daemon_state: FakeDockerDaemon = None

    def log_message(self, *args):  # silence
        pass

    def _send(self, code: int, body: bytes = b"", content_type: str = "application/json"):
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if body:
            self.wfile.write(body)

    def _json(self, code: int, payload):
        self._send(code, json.dumps(payload).encode())

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0) or 0)
        return self.rfile.read(length) if length else b""

    def _route(self):
        state = self.daemon_state
        path = self.path.split("?")[0]
        state.requests.append((self.command, path))

        if path.endswith("/_ping"):
            return self._send(200, b"OK", "text/plain")

        m = re.match(r"^/v[\d.]+/images/(.+)/json$", path)
        if m and self.command == "GET":
            name = m.group(1)
            if name in state.images:
                return self._json(200, {"Id": f"sha256:{name}"})
            return self._json(404, {"message": "no such image"})

        if path.endswith("/containers/create") and self.command == "POST":
            body = json.loads(self._read_body() or b"{}")
            if body.get("Image") not in state.images:
                return self._json(404, {"message": "no such image"})
            cid = uuid.uuid4().hex
            state.containers[cid] = FakeContainer(container_id=cid, create_body=body)
            return self._json(201, {"Id": cid})

        m = re.match(r"^/v[\d.]+/containers/([0-9a-f]+)/archive$", path)
        if m and self.command == "PUT":
            container = state.containers[m.group(1)]
            container.archive = self._read_body()
            return self._send(200)

        m = re.match(r"^/v[\d.]+/containers/([0-9a-f]+)/start$", path)
        if m and self.command == "POST":
            state.containers[m.group(1)].started = True
            return self._send(204)

        m = re.match(r"^/v[\d.]+/containers/([0-9a-f]+)/wait$", path)
        if m and self.command == "POST":
            container = state.containers[m.group(1)]
            outcome = state.outcome_for(container)
            deadline = time.monotonic() + outcome["wait_delay"]
            while time.monotonic() < deadline:
                if container.killed:
                    return self._json(200, {"StatusCode": 137})
                time.sleep(0.02)
            return self._json(200, {"StatusCode": outcome["exit_code"]})

        m = re.match(r"^/v[\d.]+/containers/([0-9a-f]+)/kill$", path)
        if m and self.command == "POST":
            state.containers[m.group(1)].killed = True
            return self._send(204)

        m = re.match(r"^/v[\d.]+/containers/([0-9a-f]+)/logs$", path)
        if m and self.command == "GET":
            container = state.containers[m.group(1)]
            outcome = state.outcome_for(container)
            return self._send(200, multiplex(outcome["stdout"], outcome["stderr"]),
                              "application/octet-stream")

        m = re.match(r"^/v[\d.]+/containers/([0-9a-f]+)/json$", path)
        if m and self.command == "GET":
            container = state.containers[m.group(1)]
            outcome = state.outcome_for(container)
            return self._json(200, {"State": {"OOMKilled": outcome["oom"]}})

        m = re.match(r"^/v[\d.]+/containers/([0-9a-f]+)$", path)
        if m and self.command == "DELETE":
            state.containers[m.group(1)].removed = True
            return self._send(204)

        if path.endswith("/containers/json") and self.command == "GET":
            alive = [
                {"Id": c.container_id}
                for c in state.containers.values()
                if not c.removed
            ]
            return self._json(200, alive)

        self._json(404, {"message": f"unhandled: {self.command} {path}"})

    do_GET = do_POST = do_PUT = do_DELETE = _route


class FakeDockerServer:
    """Context manager running the fake daemon on a localhost port."""

    def __init__(self, daemon: FakeDockerDaemon | None = None):
        self.daemon = daemon or FakeDockerDaemon()

    def __enter__(self):
        handler = type("Handler", (_Handler,), {"daemon_state": self.daemon})
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()
        self.base_url = f"http://127.0.0.1:{self.server.server_address[1]}"
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)
