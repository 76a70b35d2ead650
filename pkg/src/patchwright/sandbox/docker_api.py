"""Thin client for the container runtime's HTTP API (Docker-compatible).

Talks to the local engine socket directly: create, archive upload, start,
wait, logs, force-remove, plus a label census used by leak checks. Only the
handful of endpoints the executor needs.
"""

from __future__ import annotations

import json
import struct
import time
from typing import Dict, List, Optional, Tuple

import httpx

from ..core.errors import PatchwrightError

DEFAULT_SOCKET = "/var/run/docker.sock"
API_PREFIX = "/v1.41"


class RuntimeUnavailable(PatchwrightError):
    """No container runtime is reachable at the configured endpoint."""


class ImageError(PatchwrightError):
    """The requested image is missing and pulling is disabled."""


class ContainerWaitTimeout(PatchwrightError):
    """The container did not finish before the deadline."""


def demultiplex_logs(raw: bytes) -> Tuple[str, str]:
    """Split the engine's multiplexed log stream into (stdout, stderr)."""
    stdout = bytearray()
    stderr = bytearray()
    offset = 0
    while offset + 8 <= len(raw):
        stream_type = raw[offset]
        (size,) = struct.unpack(">I", raw[offset + 4 : offset + 8])
        payload = raw[offset + 8 : offset + 8 + size]
        if stream_type == 2:
            stderr.extend(payload)
        else:
            stdout.extend(payload)
        offset += 8 + size
    if offset == 0 and raw:
        # TTY mode or non-multiplexed runtime: everything is stdout.
        stdout.extend(raw)
    return stdout.decode("utf-8", errors="replace"), stderr.decode("utf-8", errors="replace")


class DockerClient:
    def __init__(
        self,
        socket_path: str = DEFAULT_SOCKET,
        base_url: Optional[str] = None,
        timeout: float = 60.0,
        client: Optional[httpx.Client] = None,
    ):
        if client is not None:
            self._client = client
        elif base_url is not None:
            self._client = httpx.Client(base_url=base_url, timeout=timeout)
        else:
            transport = httpx.HTTPTransport(uds=socket_path)
            self._client = httpx.Client(
                transport=transport, base_url="http://docker", timeout=timeout
            )

    def _request(self, method: str, path: str, **kwargs) -> httpx.Response:
        try:
            return self._client.request(method, API_PREFIX + path, **kwargs)
        except httpx.HTTPError as exc:
            raise RuntimeUnavailable(f"container runtime unreachable: {exc}") from exc

    def ping(self) -> bool:
        response = self._request("GET", "/_ping")
        return response.status_code == 200

    def image_exists(self, image: str) -> bool:
        response = self._request("GET", f"/images/{image}/json")
        return response.status_code == 200

    def pull_image(self, image: str) -> None:
        response = self._request("POST", "/images/create", params={"fromImage": image})
        if response.status_code >= 400:
            raise ImageError(f"failed to pull image {image!r}: HTTP {response.status_code}")

    def create_container(
        self,
        image: str,
        command: List[str],
        labels: Dict[str, str],
        memory_bytes: int,
        cpu_quota: float,
        pid_cap: int,
        workdir: str = "/workspace",
    ) -> str:
        body = {
            "Image": image,
            "Cmd": command,
            "WorkingDir": workdir,
            "Labels": labels,
            "NetworkDisabled": True,
            "HostConfig": {
                "Memory": memory_bytes,
                "NanoCpus": int(cpu_quota * 1_000_000_000),
                "PidsLimit": pid_cap,
                "NetworkMode": "none",
                "AutoRemove": False,
            },
        }
        response = self._request("POST", "/containers/create", json=body)
        if response.status_code == 404:
            raise ImageError(f"image not found: {image!r}")
        if response.status_code >= 400:
            raise RuntimeUnavailable(
                f"container create failed: HTTP {response.status_code} {response.text[:200]}"
            )
        return response.json()["Id"]

    def put_archive(self, container_id: str, path: str, archive: bytes) -> None:
        response = self._request(
            "PUT",
            f"/containers/{container_id}/archive",
            params={"path": path},
            content=archive,
            headers={"Content-Type": "application/x-tar"},
        )
        if response.status_code >= 400:
            raise RuntimeUnavailable(f"archive upload failed: HTTP {response.status_code}")

    def start(self, container_id: str) -> None:
        response = self._request("POST", f"/containers/{container_id}/start")
        if response.status_code >= 400:
            raise RuntimeUnavailable(f"container start failed: HTTP {response.status_code}")

    def wait(self, container_id: str, deadline_seconds: float) -> int:
        """Block until exit or deadline; raises ContainerWaitTimeout on breach."""
        deadline = time.monotonic() + deadline_seconds
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ContainerWaitTimeout(container_id)
            try:
                response = self._client.request(
                    "POST",
                    API_PREFIX + f"/containers/{container_id}/wait",
                    timeout=min(remaining + 1.0, 10.0),
                )
            except httpx.TimeoutException:
                continue
            except httpx.HTTPError as exc:
                raise RuntimeUnavailable(f"wait failed: {exc}") from exc
            if response.status_code >= 400:
                raise RuntimeUnavailable(f"wait failed: HTTP {response.status_code}")
            return int(response.json().get("StatusCode", -1))

    def kill(self, container_id: str) -> None:
        self._request("POST", f"/containers/{container_id}/kill")

    def logs(self, container_id: str) -> Tuple[str, str]:
        response = self._request(
            "GET",
            f"/containers/{container_id}/logs",
            params={"stdout": "1", "stderr": "1"},
        )
        if response.status_code >= 400:
            return "", ""
        return demultiplex_logs(response.content)

    def inspect(self, container_id: str) -> dict:
        response = self._request("GET", f"/containers/{container_id}/json")
        if response.status_code >= 400:
            return {}
        return response.json()

    def remove(self, container_id: str, force: bool = True) -> None:
        self._request(
            "DELETE",
            f"/containers/{container_id}",
            params={"force": "1" if force else "0", "v": "1"},
        )

    def list_containers(self, label: str) -> List[str]:
        response = self._request(
            "GET",
            "/containers/json",
            params={"all": "1", "filters": json.dumps({"label": [label]})},
        )
        if response.status_code >= 400:
            return []
        return [entry["Id"] for entry in response.json()]
