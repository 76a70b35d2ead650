"""Benchmark suite loading: JSON-lines, one instance per line, field-compatible
with the public SWE-bench instance schema so real instances load unmodified.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

from ..core.errors import PatchwrightError


class SuiteLoadError(PatchwrightError):
    """A suite line failed validation; names the instance and field."""


class DuplicateError(SuiteLoadError):
    """Two instances share an instance_id."""


@dataclass(frozen=True)
class BenchmarkInstance:
    instance_id: str
    repo_source: str
    base_commit: str
    problem_statement: str
    fail_to_pass: Tuple[str, ...]
    pass_to_pass: Tuple[str, ...] = ()
    gold_patch: Optional[str] = None
    image: str = "python:3.10-slim"
    install_command: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "fail_to_pass", tuple(self.fail_to_pass))
        object.__setattr__(self, "pass_to_pass", tuple(self.pass_to_pass))
        if not self.fail_to_pass:
            raise ValueError(f"{self.instance_id}: fail_to_pass must be non-empty")
        if not self.problem_statement.strip():
            raise ValueError(f"{self.instance_id}: problem_statement must be non-empty")


_REQUIRED = ("instance_id", "repo_source", "base_commit", "problem_statement", "fail_to_pass")


def parse_instance(payload: dict, lineno: int) -> BenchmarkInstance:
    for key in _REQUIRED:
        if key not in payload:
            raise SuiteLoadError(
                f"line {lineno} ({payload.get('instance_id', '?')}): missing field {key!r}"
            )
    try:
        return BenchmarkInstance(
            instance_id=str(payload["instance_id"]),
            repo_source=str(payload["repo_source"]),
            base_commit=str(payload["base_commit"]),
            problem_statement=str(payload["problem_statement"]),
            fail_to_pass=tuple(payload["fail_to_pass"]),
            pass_to_pass=tuple(payload.get("pass_to_pass", ())),
            gold_patch=payload.get("gold_patch"),
            image=str(payload.get("image", "python:3.10-slim")),
            install_command=str(payload.get("install_command", "")),
        )
    except (TypeError, ValueError) as exc:
        raise SuiteLoadError(f"line {lineno}: {exc}") from exc


def load_suite(path: Union[str, Path]) -> List[BenchmarkInstance]:
    path = Path(path)
    if not path.exists():
        raise SuiteLoadError(f"suite file not found: {path}")
    instances: List[BenchmarkInstance] = []
    seen = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except ValueError as exc:
            raise SuiteLoadError(f"line {lineno}: invalid JSON: {exc}") from exc
        instance = parse_instance(payload, lineno)
        if instance.instance_id in seen:
            raise DuplicateError(f"line {lineno}: duplicate instance_id {instance.instance_id!r}")
        seen.add(instance.instance_id)
        instances.append(instance)
    return instances
