"""The five agent contracts, each a typed operation over a model backend.

Every backend call is recorded as one AgentTranscript so token accounting can
be reconstructed exactly from the log. Parsing rules are strict: the planner
and critic get one re-prompt, coder/tester/debugger failures flow into the
debug loop instead.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from ..core.errors import PatchwrightError
from ..core.types import AgentRole, ArtifactKind, CodeArtifact, Plan, Step, Task, TestSuite
from ..diffs import ApplyError, CountError, ParseError, RangeError, apply_diff, parse_unified_diff
from ..retrieval.store import RetrievalHit
from .backend import ModelBackend, ModelParams, TokenUsage, truncate_to_tokens
from .prompts import PROMPTS, prompt_id


class PlanParseError(PatchwrightError):
    """Planner output was not valid JSON after a re-prompt."""


class PlanSchemaError(PlanParseError):
    """Planner output parsed but violated the plan schema; names the field."""

    def __init__(self, message: str, plan_field: str):
        super().__init__(f"{message} (field: {plan_field})")
        self.plan_field = plan_field


class EmptyPlanError(PatchwrightError):
    """Planner produced a schema-valid plan with zero steps."""


class CoderEmptyError(PatchwrightError):
    pass


class TesterEmptyError(PatchwrightError):
    pass


class DebuggerEmptyError(PatchwrightError):
    pass


class DiffApplyFailure(PatchwrightError):
    """Coder diff failed to parse or apply; routed into the debug loop."""

    def __init__(self, message: str, path: str):
        super().__init__(message)
        self.path = path


class VerdictValue(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"


@dataclass(frozen=True)
class Verdict:
    value: VerdictValue
    rationale: str = ""


@dataclass(frozen=True)
class AgentTranscript:
    agent: str
    prompt_id: str
    input_digest: str
    output: str
    usage: TokenUsage


@dataclass
class TranscriptLog:
    entries: List[AgentTranscript] = field(default_factory=list)

    def record(self, agent: str, prompt_key: str, user_input: str, output: str, usage: TokenUsage) -> None:
        digest = hashlib.sha256(user_input.encode("utf-8")).hexdigest()[:12]
        self.entries.append(
            AgentTranscript(
                agent=agent,
                prompt_id=prompt_id(prompt_key),
                input_digest=digest,
                output=output,
                usage=usage,
            )
        )

    def total_usage(self) -> TokenUsage:
        total = TokenUsage()
        for entry in self.entries:
            total = total + entry.usage
        return total


_FENCE = re.compile(r"\A```[^\n]*\n(.*?)\n?```\s*\Z", re.DOTALL)


def strip_code_fence(text: str) -> str:
    """Unwrap a single outer triple-backtick fence, language tag discarded."""
    match = _FENCE.match(text.strip())
    if match:
        return match.group(1)
    return text


def _call(
    backend: ModelBackend,
    role: str,
    prompt_key: str,
    user_input: str,
    params: ModelParams,
    log: TranscriptLog,
) -> str:
    user_input = truncate_to_tokens(user_input, params.max_input_tokens)
    output, usage = backend.complete(PROMPTS[prompt_key], user_input, params, role=role)
    log.record(role, prompt_key, user_input, output, usage)
    return output


def format_context_block(title: str, hits: Sequence[RetrievalHit], char_budget: int) -> str:
    """Serialize retrieval hits in similarity order under a character budget."""
    if not hits:
        return f"## {title}\n(none)\n"
    parts = [f"## {title}\n"]
    remaining = char_budget
    for hit in hits:
        if remaining <= 0:
            break
        snippet = hit.payload[:remaining]
        parts.append(f"[similarity {hit.similarity:.3f}] {snippet}\n")
        remaining -= len(snippet)
    return "".join(parts)


_VALID_AGENTS = {r.value for r in AgentRole}


def _parse_plan_json(payload: dict) -> Plan:
    if not isinstance(payload, dict):
        raise PlanSchemaError("plan must be a JSON object", "plan")
    steps_raw = payload.get("steps")
    if steps_raw is None or not isinstance(steps_raw, list):
        raise PlanSchemaError("missing or non-list steps", "steps")
    if not steps_raw:
        raise EmptyPlanError("plan contains zero steps")
    steps = []
    for index, raw in enumerate(steps_raw):
        if not isinstance(raw, dict):
            raise PlanSchemaError("step must be an object", f"steps[{index}]")
        agent = raw.get("agent")
        if agent not in _VALID_AGENTS:
            raise PlanSchemaError(
                f"unknown agent {agent!r}", f"steps[{index}].agent"
            )
        if agent == AgentRole.PLANNER.value:
            # A plan that schedules more planning is not executable.
            raise PlanSchemaError("planner steps are not allowed inside a plan", f"steps[{index}].agent")
        description = raw.get("description")
        if not isinstance(description, str) or not description.strip():
            raise PlanSchemaError("missing step description", f"steps[{index}].description")
        target = raw.get("file")
        if target is not None and not isinstance(target, str):
            raise PlanSchemaError("file must be a string or null", f"steps[{index}].file")
        steps.append(Step(agent=AgentRole(agent), description=description, target_file=target))
    if not any(s.agent is AgentRole.CODER for s in steps):
        raise PlanSchemaError("plan needs at least one coder step", "steps")
    return Plan(explanation=str(payload.get("explanation", "")), steps=tuple(steps))


def plan(
    task: Task,
    memory_ctx: Sequence[RetrievalHit],
    repo_ctx: Sequence[RetrievalHit],
    backend: ModelBackend,
    params: ModelParams,
    log: TranscriptLog,
    context_char_budget: int = 4000,
) -> Plan:
    """Ask the planner for a structured, schema-valid plan."""
    prompt = (
        f"# Task\n{task.description}\n\n"
        + format_context_block("Similar solved tasks", memory_ctx, context_char_budget)
        + format_context_block("Relevant repository files", repo_ctx, context_char_budget)
    )
    attempts = 0
    last_error: Optional[Exception] = None
    while attempts < 2:
        suffix = "" if attempts == 0 else "\n\nYour previous reply was not valid JSON. Respond with the JSON object only."
        output = _call(backend, "planner", "planner", prompt + suffix, params, log)
        try:
            payload = json.loads(strip_code_fence(output))
        except ValueError as exc:
            last_error = exc
            attempts += 1
            continue
        return _parse_plan_json(payload)
    raise PlanParseError(f"planner output was not valid JSON after re-prompt: {last_error}")


def generate_code(
    step: Step,
    pre_edit_file: Optional[str],
    prior_results: str,
    backend: ModelBackend,
    params: ModelParams,
    log: TranscriptLog,
) -> CodeArtifact:
    """Coder contract: a minimal diff against an existing file, or a new file."""
    if step.agent is not AgentRole.CODER:
        raise ValueError(f"generate_code requires a coder step, got {step.agent}")
    if step.target_file and pre_edit_file is not None:
        prompt = (
            f"# Step\n{step.description}\n\n# Target file: {step.target_file}\n"
            f"```\n{pre_edit_file}\n```\n\n# Prior results\n{prior_results}\n"
            "Respond with a unified diff."
        )
        output = strip_code_fence(_call(backend, "coder", "coder_diff", prompt, params, log))
        if not output.strip():
            raise CoderEmptyError("coder returned empty output")
        try:
            diff = parse_unified_diff(output)
            content = apply_diff(diff, pre_edit_file)
        except (ParseError, CountError, ApplyError, RangeError) as exc:
            raise DiffApplyFailure(
                f"{exc.__class__.__name__}: {exc}", step.target_file
            ) from exc
        return CodeArtifact(
            kind=ArtifactKind.PATCHED_FILE,
            path=step.target_file,
            content=content,
            origin_diff=diff,
        )
    prompt = (
        f"# Step\n{step.description}\n\n# Prior results\n{prior_results}\n"
        "Respond with the complete file content."
    )
    output = strip_code_fence(_call(backend, "coder", "coder_new", prompt, params, log))
    if not output.strip():
        raise CoderEmptyError("coder returned empty output")
    path = step.target_file or _default_new_path(step.description)
    return CodeArtifact(kind=ArtifactKind.NEW_FILE, path=path, content=output)


def _default_new_path(description: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "_", description.lower()).strip("_")[:32] or "solution"
    return f"{slug}.py"


def derive_test_path(code_path: str) -> str:
    """'pkg/calc.py' -> 'pkg/test_calc.py'; bare 'calc' -> 'test_calc'."""
    if "/" in code_path:
        directory, _, name = code_path.rpartition("/")
        prefix = directory + "/"
    else:
        prefix, name = "", code_path
    return f"{prefix}test_{name}"


def generate_tests(
    code: CodeArtifact,
    step: Step,
    backend: ModelBackend,
    params: ModelParams,
    log: TranscriptLog,
) -> TestSuite:
    """Tester contract: a pytest file targeting the sandbox runner conventions."""
    prompt = (
        f"# Step\n{step.description}\n\n# Code under test ({code.path})\n"
        f"```\n{code.content}\n```\n"
    )
    output = strip_code_fence(_call(backend, "tester", "tester", prompt, params, log))
    if not output.strip():
        raise TesterEmptyError("tester returned empty output")
    return TestSuite(path=derive_test_path(code.path), content=output)


def debug(
    code: CodeArtifact,
    error_output: str,
    backend: ModelBackend,
    params: ModelParams,
    log: TranscriptLog,
) -> CodeArtifact:
    """Debugger contract: full-content replacement at the same path."""
    if not error_output.strip():
        raise ValueError("debug requires non-empty error output")
    prompt = (
        f"# Failing file: {code.path}\n```\n{code.content}\n```\n\n"
        f"# Error output\n```\n{error_output}\n```\n"
        "Respond with the full corrected file content."
    )
    output = strip_code_fence(_call(backend, "debugger", "debugger", prompt, params, log))
    if not output.strip():
        raise DebuggerEmptyError("debugger returned empty output")
    return CodeArtifact(kind=ArtifactKind.NEW_FILE, path=code.path, content=output)


def critique(
    task: Task,
    results_digest: str,
    backend: ModelBackend,
    params: ModelParams,
    log: TranscriptLog,
) -> Verdict:
    """Critic contract: strict PASS/FAIL on the first line, fail-closed."""
    if not results_digest.strip():
        raise ValueError("critique requires a non-empty result log")
    prompt = f"# Task\n{task.description}\n\n# Result log\n{results_digest}\n"
    attempts = 0
    while attempts < 2:
        suffix = "" if attempts == 0 else "\n\nReply with PASS or FAIL on the first line."
        output = _call(backend, "critic", "critic", prompt + suffix, params, log)
        lines = output.strip().splitlines() or [""]
        head = lines[0].strip()
        rationale = "\n".join(lines[1:]).strip()
        if head == "PASS":
            return Verdict(VerdictValue.PASS, rationale)
        if head == "FAIL":
            return Verdict(VerdictValue.FAIL, rationale)
        attempts += 1
    return Verdict(VerdictValue.FAIL, "unparseable verdict")
