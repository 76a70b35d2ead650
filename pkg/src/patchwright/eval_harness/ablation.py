"""Ablation sweeps: run the full pipeline per (instance, configuration) and
score the emitted patches with the same resolution rule as any other patch
source. A run only contributes a patch when its final verdict is PASS; a
FAIL run resolves nothing, whatever its artifact looked like.
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from ..agents import ModelBackend
from ..core.errors import ConfigError
from ..core.types import Task
from ..diffs import make_unified_diff, render_unified_diff
from ..orchestrator import PipelineDeps, RunConfig, RunResult, run_pipeline
from ..sandbox import ResourceLimits
from .evaluate import ResolutionRecord, evaluate_patch, materialize_workspace
from .suite import BenchmarkInstance

STANDARD_ABLATIONS: Tuple[Tuple[str, Optional[str]], ...] = (
    ("full", None),
    ("no_critic", "critic"),
    ("no_debugger", "debugger"),
    ("no_tester", "tester"),
    ("no_planner", "planner"),
)


def standard_ablation_configs(base: RunConfig) -> List[Tuple[str, RunConfig]]:
    """The one-agent-at-a-time sweep, rows in report order."""
    configs: List[Tuple[str, RunConfig]] = []
    for label, disabled in STANDARD_ABLATIONS:
        configs.append((label, base if disabled is None else base.disabling(disabled)))
    return configs


def task_for_instance(instance: BenchmarkInstance, files: Dict[str, str]) -> Task:
    return Task(
        id=instance.instance_id,
        description=instance.problem_statement,
        context_files=tuple(sorted(files.items())),
    )


def patch_from_result(result: RunResult, base_files: Dict[str, str]) -> Optional[str]:
    """A PASS run's final artifact rendered as a unified diff against the
    instance's base state; FAIL runs emit nothing.
    """
    if not result.passed or result.final_artifact is None:
        return None
    artifact = result.final_artifact
    base = base_files.get(artifact.path, "")
    diff = make_unified_diff(base, artifact.content, artifact.path)
    return render_unified_diff(diff)


def run_instance_pipeline(
    instance: BenchmarkInstance,
    config: RunConfig,
    backend: ModelBackend,
    executor,
    memory=None,
) -> Tuple[RunResult, Optional[str]]:
    """Run the pipeline on one instance and derive its candidate patch."""
    with tempfile.TemporaryDirectory(prefix="patchwright-ablate-") as scratch:
        files = materialize_workspace(instance, Path(scratch) / "repo")
    task = task_for_instance(instance, files)
    deps = PipelineDeps(backend=backend, executor=executor, memory=memory)
    result = run_pipeline(task, config, deps)
    return result, patch_from_result(result, files)


@dataclass
class AblationRow:
    label: str
    resolved: int = 0
    total: int = 0
    error: Optional[str] = None
    records: List[ResolutionRecord] = field(default_factory=list)
    run_errors: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "resolved": self.resolved,
            "total": self.total,
            "error": self.error,
            "run_errors": self.run_errors,
            "records": [r.to_dict() for r in self.records],
        }


@dataclass
class AblationReport:
    rows: List[AblationRow]

    def to_dict(self) -> dict:
        return {"rows": [row.to_dict() for row in self.rows]}

    def to_text(self) -> str:
        width = max(len(row.label) for row in self.rows) if self.rows else 10
        lines = [f"{'Configuration'.ljust(width)}  Resolved  Rate"]
        for row in self.rows:
            if row.error:
                lines.append(f"{row.label.ljust(width)}  (error: {row.error})")
                continue
            rate = 100.0 * row.resolved / row.total if row.total else 0.0
            lines.append(f"{row.label.ljust(width)}  {row.resolved:>3}/{row.total:<3}   {rate:5.1f}%")
        return "\n".join(lines)

    def resolved_by_label(self) -> Dict[str, int]:
        return {row.label: row.resolved for row in self.rows if row.error is None}


def run_ablation_suite(
    instances: Sequence[BenchmarkInstance],
    configs: Sequence[Tuple[str, Union[RunConfig, str]]],
    backend_factory: Callable[[BenchmarkInstance], ModelBackend],
    executor,
    limits: Optional[ResourceLimits] = None,
) -> AblationReport:
    """One row per configuration, in the given order. A config entry carrying
    an error string (e.g. a ConfigError message) becomes an annotated row;
    per-instance failures are recorded without aborting the sweep.
    """
    labels = [label for label, _ in configs]
    if len(labels) != len(set(labels)):
        raise ConfigError("ablation configuration labels must be distinct")
    rows: List[AblationRow] = []
    for label, config in configs:
        row = AblationRow(label=label)
        rows.append(row)
        if isinstance(config, str):
            row.error = config
            continue
        for instance in instances:
            row.total += 1
            try:
                backend = backend_factory(instance)
                _, patch = run_instance_pipeline(instance, config, backend, executor)
                record = evaluate_patch(instance, patch, executor, limits=limits)
            except Exception as exc:  # noqa: BLE001 - sweep must not abort
                row.run_errors.append(f"{instance.instance_id}: {exc}")
                continue
            row.records.append(record)
            if record.resolved:
                row.resolved += 1
    return AblationReport(rows=rows)
