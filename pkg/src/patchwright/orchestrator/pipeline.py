"""The full pipeline: retrieval, planning, per-step dispatch, the bounded
tester/debugger repair loop, the final critique, and episodic persistence.

Every failure mode maps to a FAIL result with a recorded cause; batch
evaluation must never die on one bad run.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..agents import (
    AgentTranscript,
    CoderEmptyError,
    DebuggerEmptyError,
    DiffApplyFailure,
    EmptyPlanError,
    ModelBackend,
    PlanParseError,
    ScriptExhaustedError,
    TesterEmptyError,
    TokenUsage,
    TranscriptLog,
    Verdict,
    VerdictValue,
    critique,
    debug,
    generate_code,
    generate_tests,
    plan as make_plan,
)
from ..core.errors import PatchwrightError
from ..core.mdp import apply_transition
from ..core.types import (
    AgentRole,
    ArtifactKind,
    CodeArtifact,
    ExecutionOutcome,
    PipelineState,
    Plan,
    Step,
    Task,
    TestSuite,
)
from ..retrieval.memory import EpisodicMemory
from ..retrieval.repo_index import RepositoryIndex
from ..retrieval.store import StoreError
from ..sandbox import ContainerExecutor, execute, pass_predicate
from .config import Pricing, RunConfig

EventEmitter = Callable[[str, dict], None]

_TOKEN_CHUNKS = re.compile(r"\S+\s*|\s+")


def chunk_tokens(text: str) -> List[str]:
    """Byte-preserving split: concatenating the chunks reproduces the text."""
    return _TOKEN_CHUNKS.findall(text)


@dataclass
class StepRecord:
    agent: str
    description: str
    target_file: Optional[str] = None
    entries: List[dict] = field(default_factory=list)
    debug_attempts: int = 0
    sandbox_runs: int = 0
    stagnated: bool = False

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "description": self.description,
            "target_file": self.target_file,
            "entries": self.entries,
            "debug_attempts": self.debug_attempts,
            "sandbox_runs": self.sandbox_runs,
            "stagnated": self.stagnated,
        }


@dataclass(frozen=True)
class CostReport:
    input_tokens: int
    output_tokens: int
    cost_usd: float


def account_cost(transcripts: Sequence[AgentTranscript], pricing: Pricing) -> CostReport:
    """Exact token sums over the transcript log, priced per million tokens."""
    total = TokenUsage()
    for transcript in transcripts:
        total = total + transcript.usage
    cost = (
        total.input_tokens * pricing.input_per_million / 1_000_000
        + total.output_tokens * pricing.output_per_million / 1_000_000
    )
    return CostReport(total.input_tokens, total.output_tokens, cost)


@dataclass
class RunResult:
    task_id: str
    verdict: Verdict
    final_artifact: Optional[CodeArtifact]
    steps: List[StepRecord]
    transcripts: List[AgentTranscript]
    usage: TokenUsage
    cost_usd: float
    wall_time_ms: int
    error: Optional[str] = None
    infrastructure_failure: bool = False
    memory_persisted: bool = False
    schema_version: int = 1

    @property
    def passed(self) -> bool:
        return self.verdict.value is VerdictValue.PASS

    @property
    def debug_attempts_total(self) -> int:
        return sum(s.debug_attempts for s in self.steps)

    @property
    def sandbox_runs_total(self) -> int:
        return sum(s.sandbox_runs for s in self.steps)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "task_id": self.task_id,
            "verdict": {"value": self.verdict.value.value, "rationale": self.verdict.rationale},
            "final_artifact": (
                None
                if self.final_artifact is None
                else {
                    "kind": self.final_artifact.kind.value,
                    "path": self.final_artifact.path,
                    "content": self.final_artifact.content,
                }
            ),
            "steps": [s.to_dict() for s in self.steps],
            "transcripts": [
                {
                    "agent": t.agent,
                    "prompt_id": t.prompt_id,
                    "input_digest": t.input_digest,
                    "output": t.output,
                    "usage": {
                        "input_tokens": t.usage.input_tokens,
                        "output_tokens": t.usage.output_tokens,
                    },
                }
                for t in self.transcripts
            ],
            "usage": {
                "input_tokens": self.usage.input_tokens,
                "output_tokens": self.usage.output_tokens,
            },
            "cost_usd": self.cost_usd,
            "wall_time_ms": self.wall_time_ms,
            "error": self.error,
            "infrastructure_failure": self.infrastructure_failure,
            "memory_persisted": self.memory_persisted,
            "debug_attempts_total": self.debug_attempts_total,
            "sandbox_runs_total": self.sandbox_runs_total,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def canonical_dict(self) -> dict:
        """Deterministic projection: volatile wall-clock noise removed."""
        return _strip_volatile(self.to_dict())

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True)


_PYTEST_TIMING = re.compile(r"\b\d+\.\d+s\b")
_SCRATCH_PATH = re.compile(r"/tmp/patchwright-run-[A-Za-z0-9_]+")


def _normalize_stream(text: str) -> str:
    text = _PYTEST_TIMING.sub("_s", text)
    return _SCRATCH_PATH.sub("/tmp/patchwright-run-X", text)


def _strip_volatile(value):
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            # input_digest hashes raw prompt text, which can embed run timings.
            if key in ("wall_time_ms", "created_at", "timestamp", "input_digest"):
                continue
            if key in ("stdout", "stderr") and isinstance(item, str):
                out[key] = _normalize_stream(item)
            else:
                out[key] = _strip_volatile(item)
        return out
    if isinstance(value, list):
        return [_strip_volatile(v) for v in value]
    return value


@dataclass
class PipelineDeps:
    backend: ModelBackend
    executor: object
    memory: Optional[EpisodicMemory] = None
    repo_index: Optional[RepositoryIndex] = None
    emit: Optional[EventEmitter] = None


FALLBACK_CODER_DESCRIPTION = "Implement a fix for the task"


def fallback_plan() -> Plan:
    """Used when the planner is ablated: one coder, one tester, one critic."""
    return Plan(
        explanation="fallback plan (planner disabled)",
        steps=(
            Step(agent=AgentRole.CODER, description=FALLBACK_CODER_DESCRIPTION),
            Step(agent=AgentRole.TESTER, description="Verify the fix with tests"),
            Step(agent=AgentRole.CRITIC, description="Review the results"),
        ),
    )


def apply_ablation(config: RunConfig, plan: Plan) -> Plan:
    """Drop steps for disabled agents; planner ablation swaps in the fallback."""
    if AgentRole.PLANNER.value in config.disabled_agents:
        plan = fallback_plan()
    kept = tuple(s for s in plan.steps if s.agent.value not in config.disabled_agents)
    if not kept or not any(s.agent is AgentRole.CODER for s in kept):
        raise PatchwrightError("ablation removed every coder step; nothing to run")
    return Plan(explanation=plan.explanation, steps=kept)


def results_digest(entries: Sequence[dict], per_entry_chars: int, total_chars: int) -> str:
    """Serialize result entries most-recent-first under hard size caps."""
    parts: List[str] = []
    remaining = total_chars
    for entry in reversed(entries):
        text = _entry_text(entry)[:per_entry_chars]
        if remaining - len(text) < 0:
            break
        parts.append(text)
        remaining -= len(text)
    return "\n".join(parts) if parts else "(no results yet)"


def _entry_text(entry: dict) -> str:
    kind = entry.get("kind")
    if kind == "artifact":
        return (
            f"[artifact] path={entry['path']} kind={entry['artifact_kind']}\n"
            f"{entry['content']}"
        )
    if kind == "execution":
        return (
            f"[execution] exit_status={entry['exit_status']} pass={entry['pass']} "
            f"timed_out={entry['timed_out']}\nstdout: {entry['stdout']}\nstderr: {entry['stderr']}"
        )
    if kind == "verdict":
        return f"[verdict:{entry['source']}] {entry['value']} {entry['rationale']}"
    if kind == "error":
        return f"[error] {entry['message']}"
    return f"[note] {entry.get('message', '')}"


class _Emitter:
    """Null-safe event emission with byte-preserving token chunking."""

    def __init__(self, emit: Optional[EventEmitter]):
        self._emit = emit

    def __call__(self, kind: str, payload: dict) -> None:
        if self._emit is not None:
            self._emit(kind, payload)

    def tokens(self, agent: str, text: str) -> None:
        if self._emit is None:
            return
        for chunk in chunk_tokens(text):
            self._emit("token", {"agent": agent, "text": chunk})


def _outcome_entry(outcome: ExecutionOutcome, passed: bool) -> dict:
    return {
        "kind": "execution",
        "pass": passed,
        "exit_status": outcome.exit_status,
        "stdout": outcome.stdout,
        "stderr": outcome.stderr,
        "timed_out": outcome.timed_out,
        "oom_killed": outcome.oom_killed,
        "wall_time_ms": outcome.wall_time_ms,
        "isolation": outcome.isolation,
    }


def _artifact_entry(artifact: CodeArtifact) -> dict:
    return {
        "kind": "artifact",
        "agent": "coder",
        "path": artifact.path,
        "artifact_kind": artifact.kind.value,
        "content": artifact.content,
    }


def _execute_checked(
    artifact: CodeArtifact,
    tests: TestSuite,
    config: RunConfig,
    deps: PipelineDeps,
) -> ExecutionOutcome:
    image = config.sandbox_image if isinstance(deps.executor, ContainerExecutor) else None
    return execute(artifact, tests, config.limits, deps.executor, image=image)


def debug_loop(
    artifact: CodeArtifact,
    tests: TestSuite,
    outcome: ExecutionOutcome,
    config: RunConfig,
    deps: PipelineDeps,
    log: TranscriptLog,
    record: StepRecord,
    emitter: _Emitter,
    pending_error: str = "",
) -> Tuple[CodeArtifact, ExecutionOutcome]:
    """At most effective_n_retry debug->execute iterations, early exit on pass
    or on byte-identical repairs (stagnation).
    """
    retries = config.effective_n_retry()
    while not pass_predicate(outcome) and record.debug_attempts < retries:
        error_input = outcome.combined_output() or f"exit status {outcome.exit_status} with no output"
        if pending_error:
            error_input = f"{pending_error}\n{error_input}"
            pending_error = ""
        before = len(log.entries)
        repaired = debug(artifact, error_input, deps.backend, config.model, log)
        for entry in log.entries[before:]:
            emitter.tokens(entry.agent, entry.output)
        record.debug_attempts += 1
        stagnated = config.stagnation_detection and repaired.content == artifact.content
        emitter("debug_attempt", {"attempt": record.debug_attempts, "stagnated": stagnated})
        if stagnated:
            record.stagnated = True
            record.entries.append(
                {"kind": "note", "message": "debugger stagnated: identical repair, loop cut short"}
            )
            break
        artifact = repaired
        record.entries.append(_artifact_entry(artifact))
        outcome = _execute_checked(artifact, tests, config, deps)
        record.sandbox_runs += 1
        passed = pass_predicate(outcome)
        record.entries.append(_outcome_entry(outcome, passed))
        emitter(
            "execution_result",
            {
                "exit_status": outcome.exit_status,
                "pass": passed,
                "timed_out": outcome.timed_out,
                "oom_killed": outcome.oom_killed,
            },
        )
    return artifact, outcome


def run_pipeline(task: Task, config: RunConfig, deps: PipelineDeps) -> RunResult:
    """Execute the orchestration algorithm end to end for one task."""
    start = time.monotonic()
    log = TranscriptLog()
    emitter = _Emitter(deps.emit)
    emitter("run_started", {"task_id": task.id})
    try:
        result = _run_pipeline_inner(task, config, deps, log, emitter, start)
    except Exception as exc:  # noqa: BLE001 - batch runs must survive anything
        result = _fail_result(
            task,
            log,
            config,
            start,
            error=f"{exc.__class__.__name__}: {exc}",
            infrastructure=not isinstance(
                exc, (PlanParseError, EmptyPlanError, CoderEmptyError, TesterEmptyError, DebuggerEmptyError)
            ),
        )
    emitter(
        "run_completed",
        {"task_id": task.id, "verdict": result.verdict.value.value, "error": result.error},
    )
    return result


def _fail_result(
    task: Task,
    log: TranscriptLog,
    config: RunConfig,
    start: float,
    error: str,
    infrastructure: bool,
    steps: Optional[List[StepRecord]] = None,
) -> RunResult:
    cost = account_cost(log.entries, config.pricing)
    return RunResult(
        task_id=task.id,
        verdict=Verdict(VerdictValue.FAIL, error),
        final_artifact=None,
        steps=steps or [],
        transcripts=list(log.entries),
        usage=log.total_usage(),
        cost_usd=cost.cost_usd,
        wall_time_ms=int((time.monotonic() - start) * 1000),
        error=error,
        infrastructure_failure=infrastructure,
    )


def _run_pipeline_inner(
    task: Task,
    config: RunConfig,
    deps: PipelineDeps,
    log: TranscriptLog,
    emitter: _Emitter,
    start: float,
) -> RunResult:
    memory_hits = (
        deps.memory.query(task.description, config.retrieval_k) if deps.memory is not None else []
    )
    repo_hits = (
        deps.repo_index.query(task.description, config.retrieval_k)
        if deps.repo_index is not None
        else []
    )

    if AgentRole.PLANNER.value in config.disabled_agents:
        the_plan = fallback_plan()
    else:
        before = len(log.entries)
        try:
            the_plan = make_plan(
                task,
                memory_hits,
                repo_hits,
                deps.backend,
                config.model,
                log,
                context_char_budget=config.context_char_budget,
            )
        finally:
            for entry in log.entries[before:]:
                emitter.tokens(entry.agent, entry.output)
    the_plan = apply_ablation(config, the_plan)

    state = PipelineState(repo=dict(task.context_files), memory=deps.memory)
    artifact: Optional[CodeArtifact] = None
    results: List[dict] = []
    steps: List[StepRecord] = []
    pending_error = ""
    last_outcome: Optional[ExecutionOutcome] = None

    def digest() -> str:
        return results_digest(results, config.results_entry_chars, config.results_total_chars)

    for index, step in enumerate(the_plan.steps):
        record = StepRecord(
            agent=step.agent.value, description=step.description, target_file=step.target_file
        )
        steps.append(record)
        emitter(
            "step_started",
            {"index": index, "agent": step.agent.value, "description": step.description},
        )

        if step.agent is AgentRole.CODER:
            pre_edit = state.repo.get(step.target_file) if step.target_file else None
            before = len(log.entries)
            try:
                artifact = generate_code(
                    step, pre_edit, digest(), deps.backend, config.model, log
                )
            except DiffApplyFailure as exc:
                pending_error = str(exc)
                entry = {"kind": "error", "message": pending_error}
                record.entries.append(entry)
                results.append(entry)
                if pre_edit is not None:
                    # Keep the unchanged file as the candidate so the tester
                    # still exercises it and the debugger sees the real error.
                    artifact = CodeArtifact(
                        kind=ArtifactKind.NEW_FILE, path=step.target_file, content=pre_edit
                    )
            except CoderEmptyError as exc:
                entry = {"kind": "error", "message": str(exc)}
                record.entries.append(entry)
                results.append(entry)
            finally:
                for entry in log.entries[before:]:
                    emitter.tokens(entry.agent, entry.output)
            if artifact is not None and not pending_error:
                entry = _artifact_entry(artifact)
                record.entries.append(entry)
                results.append(entry)

        elif step.agent is AgentRole.TESTER:
            if artifact is None:
                entry = {"kind": "error", "message": "no code artifact available for testing"}
                record.entries.append(entry)
                results.append(entry)
                continue
            before = len(log.entries)
            tests = generate_tests(artifact, step, deps.backend, config.model, log)
            for entry in log.entries[before:]:
                emitter.tokens(entry.agent, entry.output)
            outcome = _execute_checked(artifact, tests, config, deps)
            record.sandbox_runs += 1
            passed = pass_predicate(outcome)
            record.entries.append(_outcome_entry(outcome, passed))
            emitter(
                "execution_result",
                {
                    "exit_status": outcome.exit_status,
                    "pass": passed,
                    "timed_out": outcome.timed_out,
                    "oom_killed": outcome.oom_killed,
                },
            )
            state = apply_transition(state, artifact, outcome)
            artifact, outcome = debug_loop(
                artifact, tests, outcome, config, deps, log, record, emitter, pending_error
            )
            pending_error = ""
            state = apply_transition(state, artifact, outcome)
            last_outcome = outcome
            results.append(_outcome_entry(outcome, pass_predicate(outcome)))

        elif step.agent is AgentRole.CRITIC:
            before = len(log.entries)
            verdict = critique(task, digest(), deps.backend, config.model, log)
            for entry in log.entries[before:]:
                emitter.tokens(entry.agent, entry.output)
            entry = {
                "kind": "verdict",
                "source": "critic_step",
                "value": verdict.value.value,
                "rationale": verdict.rationale,
            }
            record.entries.append(entry)
            results.append(entry)
            emitter("verdict", {"source": "critic_step", "value": verdict.value.value})

        elif step.agent is AgentRole.DEBUGGER:
            entry = {
                "kind": "note",
                "message": "standalone debugger steps are a no-op; repairs happen in the tester loop",
            }
            record.entries.append(entry)
            results.append(entry)

    # The final critique always runs (unless the critic is ablated).
    if AgentRole.CRITIC.value in config.disabled_agents:
        if last_outcome is None:
            final_verdict = Verdict(VerdictValue.FAIL, "critic disabled and no execution evidence")
        elif pass_predicate(last_outcome):
            final_verdict = Verdict(VerdictValue.PASS, "pass predicate of last execution")
        else:
            final_verdict = Verdict(VerdictValue.FAIL, "pass predicate of last execution")
    else:
        before = len(log.entries)
        final_verdict = critique(task, digest(), deps.backend, config.model, log)
        for entry in log.entries[before:]:
            emitter.tokens(entry.agent, entry.output)
    results.append(
        {
            "kind": "verdict",
            "source": "final",
            "value": final_verdict.value.value,
            "rationale": final_verdict.rationale,
        }
    )
    emitter("verdict", {"source": "final", "value": final_verdict.value.value})

    if final_verdict.value is VerdictValue.PASS and artifact is None:
        final_verdict = Verdict(VerdictValue.FAIL, "verdict was PASS but no artifact was produced")

    memory_persisted = False
    if final_verdict.value is VerdictValue.PASS and deps.memory is not None:
        try:
            deps.memory.store_episode(task, artifact.content)
            memory_persisted = True
        except StoreError as exc:
            results.append({"kind": "error", "message": f"memory persistence failed: {exc}"})

    cost = account_cost(log.entries, config.pricing)
    return RunResult(
        task_id=task.id,
        verdict=final_verdict,
        final_artifact=artifact,
        steps=steps,
        transcripts=list(log.entries),
        usage=log.total_usage(),
        cost_usd=cost.cost_usd,
        wall_time_ms=int((time.monotonic() - start) * 1000),
        memory_persisted=memory_persisted,
    )
