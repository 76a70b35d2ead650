"""Domain types shared across the pipeline.

All types here are immutable values: frozen dataclasses with tuple-typed
collections, safe to share between threads. Mappings handed in (repo views)
are defensively copied and never mutated in place.
"""

from __future__ import annotations

import posixpath
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence, Tuple

from .errors import PathError


def validate_relative_path(path: str) -> str:
    """Reject absolute paths and parent-directory escapes.

    Returns the path unchanged so callers can validate inline.
    """
    if not path:
        raise PathError("empty path")
    if path.startswith("/") or path.startswith("\\"):
        raise PathError(f"absolute path not allowed: {path!r}")
    if len(path) > 1 and path[1] == ":":  # drive letter
        raise PathError(f"absolute path not allowed: {path!r}")
    normalized = posixpath.normpath(path)
    if normalized == ".." or normalized.startswith("../"):
        raise PathError(f"path escapes root: {path!r}")
    return path


class AgentRole(str, Enum):
    PLANNER = "planner"
    CODER = "coder"
    TESTER = "tester"
    DEBUGGER = "debugger"
    CRITIC = "critic"


class ArtifactKind(str, Enum):
    NEW_FILE = "new_file"
    PATCHED_FILE = "patched_file"


@dataclass(frozen=True)
class Task:
    """A natural-language software task plus optional context files."""

    id: str
    description: str
    context_files: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise ValueError("task description must be non-empty")
        object.__setattr__(self, "context_files", tuple(tuple(p) for p in self.context_files))
        seen = set()
        for path, _content in self.context_files:
            validate_relative_path(path)
            if path in seen:
                raise ValueError(f"duplicate context file path: {path!r}")
            seen.add(path)


@dataclass(frozen=True)
class Step:
    """One plan step: which agent acts, what it does, optionally on which file."""

    agent: AgentRole
    description: str
    target_file: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise ValueError("step description must be non-empty")
        if self.target_file is not None:
            validate_relative_path(self.target_file)


@dataclass(frozen=True)
class Plan:
    """An ordered, structured decomposition of a task into agent steps."""

    explanation: str
    steps: Tuple[Step, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("plan must contain at least one step")
        if not any(s.agent is AgentRole.CODER for s in self.steps):
            raise ValueError("plan must contain at least one coder step")


@dataclass(frozen=True)
class ExecutionOutcome:
    """Captured result of one sandboxed run: streams, status, verdict flags."""

    stdout: str
    stderr: str
    exit_status: int
    timed_out: bool = False
    oom_killed: bool = False
    wall_time_ms: int = 0
    isolation: str = "container"
    limits_unenforced: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "limits_unenforced", tuple(self.limits_unenforced))
        if self.timed_out and self.exit_status == 0:
            raise ValueError("a timed-out execution cannot report exit status 0")

    def combined_output(self) -> str:
        """Stdout and stderr merged, the debugger's input."""
        parts = []
        if self.stdout:
            parts.append(self.stdout)
        if self.stderr:
            parts.append(self.stderr)
        return "\n".join(parts)


@dataclass(frozen=True)
class CodeArtifact:
    """A candidate action: a whole new file or the result of a minimal patch."""

    kind: ArtifactKind
    path: str
    content: str
    origin_diff: Optional[object] = None  # diffs.UnifiedDiff when kind=patched_file

    def __post_init__(self) -> None:
        validate_relative_path(self.path)
        if self.kind is ArtifactKind.PATCHED_FILE and self.origin_diff is None:
            raise ValueError("patched_file artifact requires its origin diff")


@dataclass(frozen=True)
class HistoryEntry:
    """One (action, observation) pair appended to the execution history."""

    action: CodeArtifact
    stdout: str
    stderr: str
    exit_status: int
    timestamp: float = field(default_factory=time.monotonic)


@dataclass(frozen=True)
class PipelineState:
    """The iterative-refinement state: repo view, memory handle, history."""

    repo: Mapping[str, str]
    memory: object = None
    history: Tuple[HistoryEntry, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "repo", dict(self.repo))
        object.__setattr__(self, "history", tuple(self.history))


@dataclass(frozen=True)
class TestOutcomes:
    """Per-test pass/fail results split into the two benchmark categories."""

    fail_to_pass: Tuple[Tuple[str, bool], ...]
    pass_to_pass: Tuple[Tuple[str, bool], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "fail_to_pass", tuple(tuple(x) for x in self.fail_to_pass))
        object.__setattr__(self, "pass_to_pass", tuple(tuple(x) for x in self.pass_to_pass))
        for name, group in (("fail_to_pass", self.fail_to_pass), ("pass_to_pass", self.pass_to_pass)):
            ids = [tid for tid, _ in group]
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate test ids in {name}")


@dataclass(frozen=True)
class TestSuite:
    """A generated test file destined for the sandbox test runner."""

    path: str
    content: str

    def __post_init__(self) -> None:
        validate_relative_path(self.path)
        if not self.content.strip():
            raise ValueError("test suite content must be non-empty")
