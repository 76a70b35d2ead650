"""Verified execution: run candidate code and tests in a disposable,
resource-constrained, network-isolated environment and judge the outcome.
"""

from __future__ import annotations

import sys
from typing import Optional, Protocol, Union

from ..core.types import CodeArtifact, ExecutionOutcome, TestSuite
from .archive import build_archive, extract_archive
from .container import SANDBOX_LABEL, ContainerExecutor
from .docker_api import (
    ContainerWaitTimeout,
    DockerClient,
    ImageError,
    RuntimeUnavailable,
    demultiplex_logs,
)
from .limits import MIB, ResourceLimits
from .predicate import pass_predicate, stream_pass
from .subprocess_exec import SubprocessExecutor


class Executor(Protocol):
    name: str

    def run(self, files, command, limits: ResourceLimits) -> ExecutionOutcome: ...


def test_command_for(executor: "Executor", test_path: str) -> list:
    """Test-runner invocation matching the executor's environment."""
    python = sys.executable if executor.name == "subprocess" else "python"
    return [python, "-m", "pytest", "-q", test_path]


def execute(
    code: CodeArtifact,
    tests: TestSuite,
    limits: ResourceLimits,
    executor: Union[ContainerExecutor, SubprocessExecutor],
    image: Optional[str] = None,
) -> ExecutionOutcome:
    """Run one (code, tests) pair in a fresh environment and capture everything."""
    files = {code.path: code.content, tests.path: tests.content}
    command = test_command_for(executor, tests.path)
    if isinstance(executor, ContainerExecutor):
        return executor.run(files, command, limits, image=image)
    return executor.run(files, command, limits)


__all__ = [
    "MIB",
    "SANDBOX_LABEL",
    "ContainerExecutor",
    "ContainerWaitTimeout",
    "DockerClient",
    "Executor",
    "ExecutionOutcome",
    "ImageError",
    "ResourceLimits",
    "RuntimeUnavailable",
    "SubprocessExecutor",
    "build_archive",
    "demultiplex_logs",
    "execute",
    "extract_archive",
    "pass_predicate",
    "stream_pass",
    "test_command_for",
]
