"""Container-backed executor: one disposable container per run.

Removal is registered before the container ever starts and runs on every
exit path, so no run can leak a container no matter how it ends.
"""

from __future__ import annotations

import time
from typing import Mapping, Sequence

from ..core.types import ExecutionOutcome
from .archive import build_archive
from .docker_api import ContainerWaitTimeout, DockerClient, ImageError
from .limits import ResourceLimits
from .subprocess_exec import _cap

SANDBOX_LABEL = "patchwright.sandbox"


class ContainerExecutor:
    name = "container"

    def __init__(
        self,
        client: DockerClient,
        image: str = "python:3.10-slim",
        workdir: str = "/workspace",
        allow_pull: bool = False,
    ):
        self.client = client
        self.image = image
        self.workdir = workdir
        self.allow_pull = allow_pull

    def run(
        self,
        files: Mapping[str, str],
        command: Sequence[str],
        limits: ResourceLimits,
        image: str | None = None,
    ) -> ExecutionOutcome:
        image = image or self.image
        if not self.client.image_exists(image):
            if self.allow_pull:
                self.client.pull_image(image)
            else:
                raise ImageError(f"image not present and pulling disabled: {image!r}")

        container_id = self.client.create_container(
            image=image,
            command=list(command),
            labels={SANDBOX_LABEL: "1"},
            memory_bytes=limits.memory_bytes,
            cpu_quota=limits.cpu_quota,
            pid_cap=limits.pid_cap,
            workdir=self.workdir,
        )
        start = time.monotonic()
        timed_out = False
        exit_status = -1
        try:
            self.client.put_archive(container_id, self.workdir, build_archive(files.items()))
            self.client.start(container_id)
            try:
                exit_status = self.client.wait(container_id, limits.timeout_seconds)
            except ContainerWaitTimeout:
                timed_out = True
                self.client.kill(container_id)
                exit_status = 137
            stdout, stderr = self.client.logs(container_id)
            state = self.client.inspect(container_id).get("State", {})
            oom = bool(state.get("OOMKilled", False))
            wall_ms = int((time.monotonic() - start) * 1000)
            return ExecutionOutcome(
                stdout=_cap(stdout),
                stderr=_cap(stderr),
                exit_status=exit_status if not (timed_out and exit_status == 0) else 137,
                timed_out=timed_out,
                oom_killed=oom,
                wall_time_ms=wall_ms,
                isolation="container",
            )
        finally:
            self.client.remove(container_id, force=True)

    def census(self) -> list:
        """Containers carrying our sandbox label; must be empty after runs."""
        return self.client.list_containers(f"{SANDBOX_LABEL}=1")
