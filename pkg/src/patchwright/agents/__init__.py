"""Agent contracts over a pluggable model backend, plus the deterministic
scripted backend used for tests and offline runs.
"""

from .backend import (
    BackendError,
    ModelBackend,
    ModelParams,
    RemoteBackend,
    ScriptExhaustedError,
    ScriptRule,
    ScriptedBackend,
    TokenUsage,
    approx_tokens,
    truncate_to_tokens,
)
from .roles import (
    AgentTranscript,
    CoderEmptyError,
    DebuggerEmptyError,
    DiffApplyFailure,
    EmptyPlanError,
    PlanParseError,
    PlanSchemaError,
    TesterEmptyError,
    TranscriptLog,
    Verdict,
    VerdictValue,
    critique,
    debug,
    derive_test_path,
    format_context_block,
    generate_code,
    generate_tests,
    plan,
    strip_code_fence,
)

__all__ = [
    "AgentTranscript",
    "BackendError",
    "CoderEmptyError",
    "DebuggerEmptyError",
    "DiffApplyFailure",
    "EmptyPlanError",
    "ModelBackend",
    "ModelParams",
    "PlanParseError",
    "PlanSchemaError",
    "RemoteBackend",
    "ScriptExhaustedError",
    "ScriptRule",
    "ScriptedBackend",
    "TesterEmptyError",
    "TokenUsage",
    "TranscriptLog",
    "Verdict",
    "VerdictValue",
    "approx_tokens",
    "critique",
    "debug",
    "derive_test_path",
    "format_context_block",
    "generate_code",
    "generate_tests",
    "plan",
    "strip_code_fence",
    "truncate_to_tokens",
]
