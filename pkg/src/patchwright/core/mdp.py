"""The decision-process layer: reward, state transition, and the closed-form
success/error formulas used to analyze pipeline decomposition.

All operations are pure functions over the immutable types in
:mod:`patchwright.core.types`.
"""

from __future__ import annotations

from typing import Sequence

from .errors import DomainError, InvalidOutcome
from .types import CodeArtifact, ExecutionOutcome, HistoryEntry, PipelineState, TestOutcomes


def reward(outcomes: TestOutcomes) -> int:
    """Binary reward: 1 iff every fail-to-pass test passes and nothing regresses.

    Raises InvalidOutcome for an empty fail_to_pass list: a task with nothing
    to fix is malformed, not trivially solved.
    """
    if not outcomes.fail_to_pass:
        raise InvalidOutcome("fail_to_pass is empty; nothing to fix")
    all_f2p = all(passed for _, passed in outcomes.fail_to_pass)
    all_p2p = all(passed for _, passed in outcomes.pass_to_pass)
    return 1 if (all_f2p and all_p2p) else 0


def apply_transition(
    state: PipelineState, action: CodeArtifact, outcome: ExecutionOutcome
) -> PipelineState:
    """Advance the state: patch the repo view and append one history entry.

    The input state is left untouched; callers keep a valid snapshot of the
    pre-action world.
    """
    new_repo = dict(state.repo)
    new_repo[action.path] = action.content
    entry = HistoryEntry(
        action=action,
        stdout=outcome.stdout,
        stderr=outcome.stderr,
        exit_status=outcome.exit_status,
    )
    return PipelineState(
        repo=new_repo,
        memory=state.memory,
        history=state.history + (entry,),
    )


def _check_probability(p: float, name: str = "p") -> None:
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"{name}={p!r} outside [0, 1]")


def pipeline_success_probability(per_agent_error: Sequence[float]) -> float:
    """Probability that a single pipeline pass succeeds: prod(1 - p_i)."""
    result = 1.0
    for i, p in enumerate(per_agent_error):
        _check_probability(p, f"p[{i}]")
        result *= 1.0 - p
    return result


def monolithic_success(p: float, k: int) -> float:
    """Probability a single agent with per-attempt failure p succeeds in k tries."""
    _check_probability(p)
    if k < 1:
        raise DomainError(f"attempt count k={k} must be >= 1")
    return 1.0 - p**k


def decomposition_improves(per_agent_error: Sequence[float], monolithic_p: float) -> bool:
    """Strict comparison: does splitting into agents beat one single-pass agent?

    Equality counts as no improvement.
    """
    _check_probability(monolithic_p, "monolithic_p")
    return pipeline_success_probability(per_agent_error) > (1.0 - monolithic_p)


def token_error_probability(epsilon: float, tokens: int) -> float:
    """Probability at least one of `tokens` generated tokens is wrong."""
    _check_probability(epsilon, "epsilon")
    if tokens < 0:
        raise DomainError(f"token count {tokens} must be >= 0")
    return 1.0 - (1.0 - epsilon) ** tokens
