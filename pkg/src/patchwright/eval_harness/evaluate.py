"""Patch evaluation: checkout, apply, install, run fail-to-pass, run
pass-to-pass, decide resolution. Every evaluation works in a disposable
scratch workspace; the instance's repo source is never touched.
"""

from __future__ import annotations

import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ..core.errors import PatchwrightError
from ..core.mdp import reward
from ..core.types import TestOutcomes
from ..diffs import apply_diff, parse_multi_file_diff
from ..sandbox import ContainerExecutor, ResourceLimits, SubprocessExecutor

EVAL_TIMEOUT_SECONDS = 300.0


class ReportError(PatchwrightError):
    """The record set violates a reporting invariant."""


class EmptyReportError(ReportError):
    """A report was requested over zero records."""


class _EvalDeadline(Exception):
    pass


class FailureClass(str, Enum):
    APPLY_FAIL = "apply_fail"
    F2P_FAIL = "f2p_fail"
    P2P_REGRESS = "p2p_regress"
    TIMEOUT = "timeout"
    INFRA = "infra"


@dataclass(frozen=True)
class ResolutionRecord:
    instance_id: str
    patch_applied: bool
    outcomes: Optional[TestOutcomes]
    resolved: bool
    failure_class: Optional[FailureClass] = None
    detail: str = ""

    def __post_init__(self) -> None:
        if self.resolved and not self.patch_applied:
            raise ValueError("a patch cannot resolve without applying")

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "patch_applied": self.patch_applied,
            "resolved": self.resolved,
            "failure_class": self.failure_class.value if self.failure_class else None,
            "detail": self.detail,
        }


def materialize_workspace(instance, dest: Path) -> Dict[str, str]:
    """Check out the instance repository at its base commit into `dest` and
    return the text files as a path -> content map.
    """
    source = Path(instance.repo_source)
    if not source.exists():
        raise PatchwrightError(f"repo source does not exist: {source}")
    if (source / ".git").exists() and instance.base_commit not in ("", "WORKTREE"):
        subprocess.run(
            ["git", "clone", "--quiet", str(source), str(dest)],
            check=True,
            capture_output=True,
        )
        subprocess.run(
            ["git", "checkout", "--quiet", instance.base_commit],
            cwd=dest,
            check=True,
            capture_output=True,
        )
    else:
        shutil.copytree(source, dest, dirs_exist_ok=True, ignore=shutil.ignore_patterns(".git"))
    files: Dict[str, str] = {}
    for path in sorted(dest.rglob("*")):
        if path.is_file() and ".git" not in path.parts:
            try:
                files[path.relative_to(dest).as_posix()] = path.read_text(encoding="utf-8")
            except (UnicodeDecodeError, OSError):
                continue
    return files


def apply_patch_to_workspace(patch_text: str, workspace: Path) -> List[str]:
    """Strictly apply a (possibly multi-file) unified diff inside `workspace`.
    Returns the list of touched paths; raises on any mismatch.
    """
    diffs = parse_multi_file_diff(patch_text)
    touched = []
    for diff in diffs:
        if diff.target_path is None:
            raise PatchwrightError("patch deletes a file; deletions are not supported")
        target = workspace / diff.target_path
        original = target.read_text(encoding="utf-8") if target.exists() else ""
        patched = apply_diff(diff, original)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(patched, encoding="utf-8")
        touched.append(diff.target_path)
    return touched


def _run_test(
    executor,
    workspace: Path,
    files: Dict[str, str],
    test_id: str,
    install_command: str,
    limits: ResourceLimits,
    image: Optional[str],
):
    pytest_cmd = f"python -m pytest -q {test_id}"
    command = ["/bin/sh", "-c", f"{install_command} && {pytest_cmd}" if install_command else pytest_cmd]
    if isinstance(executor, ContainerExecutor):
        return executor.run(files, command, limits, image=image)
    import sys

    pytest_cmd = f"{sys.executable} -m pytest -q {test_id}"
    command = ["/bin/sh", "-c", f"{install_command} && {pytest_cmd}" if install_command else pytest_cmd]
    return executor.run({}, command, limits, workdir=workspace)


def evaluate_patch(
    instance,
    patch_text: Optional[str],
    executor,
    limits: Optional[ResourceLimits] = None,
    eval_timeout_seconds: float = EVAL_TIMEOUT_SECONDS,
) -> ResolutionRecord:
    """The five-step protocol for one instance; never raises on a bad patch.

    Individual executions are bounded by `limits.timeout_seconds`; the whole
    instance evaluation is additionally bounded by `eval_timeout_seconds`
    (infra class on breach).
    """
    limits = limits or ResourceLimits()
    deadline = time.monotonic() + eval_timeout_seconds
    if not patch_text or not patch_text.strip():
        return ResolutionRecord(
            instance_id=instance.instance_id,
            patch_applied=False,
            outcomes=None,
            resolved=False,
            failure_class=FailureClass.APPLY_FAIL,
            detail="no patch produced",
        )

    scratch = Path(tempfile.mkdtemp(prefix="patchwright-eval-"))
    try:
        workspace = scratch / "repo"
        try:
            materialize_workspace(instance, workspace)
        except (PatchwrightError, subprocess.CalledProcessError, OSError) as exc:
            return ResolutionRecord(
                instance_id=instance.instance_id,
                patch_applied=False,
                outcomes=None,
                resolved=False,
                failure_class=FailureClass.INFRA,
                detail=f"checkout failed: {exc}",
            )
        try:
            apply_patch_to_workspace(patch_text, workspace)
        except (PatchwrightError, OSError) as exc:
            return ResolutionRecord(
                instance_id=instance.instance_id,
                patch_applied=False,
                outcomes=None,
                resolved=False,
                failure_class=FailureClass.APPLY_FAIL,
                detail=str(exc),
            )

        files = {
            p.relative_to(workspace).as_posix(): p.read_text(encoding="utf-8")
            for p in sorted(workspace.rglob("*"))
            if p.is_file() and ".git" not in p.parts
        }

        def run_group(test_ids: Sequence[str]) -> Tuple[List[Tuple[str, bool]], bool]:
            results = []
            any_timeout = False
            for test_id in test_ids:
                if time.monotonic() > deadline:
                    raise _EvalDeadline()
                outcome = _run_test(
                    executor,
                    workspace,
                    files,
                    test_id,
                    instance.install_command,
                    limits,
                    instance.image,
                )
                any_timeout = any_timeout or outcome.timed_out
                results.append((test_id, outcome.exit_status == 0 and not outcome.timed_out))
            return results, any_timeout

        try:
            f2p_results, f2p_timeout = run_group(instance.fail_to_pass)
            p2p_results, p2p_timeout = run_group(instance.pass_to_pass)
        except _EvalDeadline:
            return ResolutionRecord(
                instance_id=instance.instance_id,
                patch_applied=True,
                outcomes=None,
                resolved=False,
                failure_class=FailureClass.INFRA,
                detail=f"instance evaluation exceeded {eval_timeout_seconds:.0f}s wall time",
            )
        outcomes = TestOutcomes(fail_to_pass=tuple(f2p_results), pass_to_pass=tuple(p2p_results))
        resolved = reward(outcomes) == 1

        failure: Optional[FailureClass] = None
        if not resolved:
            if f2p_timeout or p2p_timeout:
                failure = FailureClass.TIMEOUT
            elif not all(ok for _, ok in f2p_results):
                failure = FailureClass.F2P_FAIL
            else:
                failure = FailureClass.P2P_REGRESS
        return ResolutionRecord(
            instance_id=instance.instance_id,
            patch_applied=True,
            outcomes=outcomes,
            resolved=resolved,
            failure_class=failure,
        )
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


def resolve_rate(records: Sequence[ResolutionRecord]) -> Tuple[float, float]:
    """(resolve rate %, patch rate %) over the record set."""
    if not records:
        raise EmptyReportError("no resolution records to report on")
    for record in records:
        if record.resolved and not record.patch_applied:
            raise ReportError(
                f"inconsistent record for {record.instance_id}: resolved without applying"
            )
    total = len(records)
    resolved = sum(1 for r in records if r.resolved)
    applied = sum(1 for r in records if r.patch_applied)
    return 100.0 * resolved / total, 100.0 * applied / total
