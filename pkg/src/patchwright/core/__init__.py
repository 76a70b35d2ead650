"""Domain types and the decision-process math shared by every other module."""

from .errors import ConfigError, DomainError, InvalidOutcome, PatchwrightError, PathError
from .mdp import (
    apply_transition,
    decomposition_improves,
    monolithic_success,
    pipeline_success_probability,
    reward,
    token_error_probability,
)
from .types import (
    AgentRole,
    ArtifactKind,
    CodeArtifact,
    ExecutionOutcome,
    HistoryEntry,
    PipelineState,
    Plan,
    Step,
    Task,
    TestOutcomes,
    TestSuite,
    validate_relative_path,
)

__all__ = [
    "AgentRole",
    "ArtifactKind",
    "CodeArtifact",
    "ConfigError",
    "DomainError",
    "ExecutionOutcome",
    "HistoryEntry",
    "InvalidOutcome",
    "PatchwrightError",
    "PathError",
    "PipelineState",
    "Plan",
    "Step",
    "Task",
    "TestOutcomes",
    "TestSuite",
    "apply_transition",
    "decomposition_improves",
    "monolithic_success",
    "pipeline_success_probability",
    "reward",
    "token_error_probability",
    "validate_relative_path",
]
