"""Subprocess-based executor: the fallback for hosts without a container
runtime (opt-in). Enforces the timeout by killing the process group and the
memory cap through rlimits; CPU quota and PID caps are recorded as unenforced.
Network isolation uses an unshared network namespace when the host allows it,
otherwise the outcome is flagged "isolation: none".
"""

from __future__ import annotations

import os
import resource
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from pathlib import Path
from typing import Mapping, Optional, Sequence

from ..core.types import ExecutionOutcome
from .limits import ResourceLimits

STREAM_CAP = 1024 * 1024
TRUNCATION_MARKER = "\n[truncated by stream cap]"


def _cap(text: str) -> str:
    if len(text) <= STREAM_CAP:
        return text
    return text[:STREAM_CAP] + TRUNCATION_MARKER


def _netns_prefix() -> Optional[list]:
    """Command prefix unsharing the network namespace, if the host allows it."""
    unshare = shutil.which("unshare")
    if unshare is None:
        return None
    for args in (["--map-root-user", "--net"], ["-n"]):
        try:
            probe = subprocess.run(
                [unshare, *args, "true"], capture_output=True, timeout=5
            )
        except (OSError, subprocess.TimeoutExpired):
            return None
        if probe.returncode == 0:
            return [unshare, *args]
    return None


class SubprocessExecutor:
    name = "subprocess"

    def __init__(
        self,
        enforce_memory: bool = True,
        isolate_network: bool = True,
        python: str = sys.executable,
    ):
        self.enforce_memory = enforce_memory
        self.python = python
        self._netns = _netns_prefix() if isolate_network else None

    @property
    def network_isolated(self) -> bool:
        return self._netns is not None

    def run(
        self,
        files: Mapping[str, str],
        command: Sequence[str],
        limits: ResourceLimits,
        workdir: Optional[Path] = None,
    ) -> ExecutionOutcome:
        """Stage `files`, run `command` in that directory under `limits`."""
        if workdir is None:
            scratch = tempfile.mkdtemp(prefix="patchwright-run-")
            cleanup = True
        else:
            scratch = str(workdir)
            cleanup = False
        try:
            for rel, content in files.items():
                target = Path(scratch) / rel
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(content, encoding="utf-8")
            return self._execute(scratch, list(command), limits)
        finally:
            if cleanup:
                shutil.rmtree(scratch, ignore_errors=True)

    def _execute(self, cwd: str, command: list, limits: ResourceLimits) -> ExecutionOutcome:
        unenforced = ["cpu_quota", "pid_cap"]
        memory_bytes = limits.memory_bytes
        enforce_memory = self.enforce_memory

        def set_limits():
            os.setsid()
            if enforce_memory:
                resource.setrlimit(resource.RLIMIT_AS, (memory_bytes, memory_bytes))

        if not enforce_memory:
            unenforced.append("memory")

        full_command = (self._netns or []) + command
        isolation = "netns" if self._netns else "none"
        if self._netns is None:
            unenforced.append("network")

        start = time.monotonic()
        timed_out = False
        env = dict(os.environ)
        env.setdefault("PYTHONDONTWRITEBYTECODE", "1")
        try:
            proc = subprocess.Popen(
                full_command,
                cwd=cwd,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                preexec_fn=set_limits,
                env=env,
                text=True,
            )
        except OSError as exc:
            return ExecutionOutcome(
                stdout="",
                stderr=f"failed to launch: {exc}",
                exit_status=127,
                isolation=isolation,
                limits_unenforced=tuple(unenforced),
            )
        try:
            stdout, stderr = proc.communicate(timeout=limits.timeout_seconds)
            exit_status = proc.returncode
        except subprocess.TimeoutExpired:
            timed_out = True
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            stdout, stderr = proc.communicate()
            exit_status = proc.returncode if proc.returncode not in (None, 0) else 124
        wall_ms = int((time.monotonic() - start) * 1000)

        oom = exit_status in (-9, 137) and not timed_out
        if "MemoryError" in (stderr or "") and enforce_memory:
            oom = True
        return ExecutionOutcome(
            stdout=_cap(stdout or ""),
            stderr=_cap(stderr or ""),
            exit_status=exit_status,
            timed_out=timed_out,
            oom_killed=oom,
            wall_time_ms=wall_ms,
            isolation=isolation,
            limits_unenforced=tuple(unenforced),
        )
