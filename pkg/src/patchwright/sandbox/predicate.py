"""The pass/fail rule applied to every sandbox execution.

The stream rule (empty stderr, no FAILED/ERROR token in stdout) is kept as a
standalone check; the full predicate additionally requires a zero exit status
and no timeout, because a crashed runner can die with empty streams.
"""

from __future__ import annotations

import re

from ..core.types import ExecutionOutcome

# Case-sensitive whole-token match so identifiers like "error_rate" or the
# plural "ERRORS" never trip the rule.
_FAILURE_TOKENS = re.compile(r"\b(?:FAILED|ERROR)\b")


def stream_pass(stdout: str, stderr: str, token_match: bool = True) -> bool:
    """The literal stream rule: stderr empty, no failure token in stdout.

    `token_match=False` downgrades to plain substring matching for callers
    that want the broadest possible reading.
    """
    if stderr != "":
        return False
    if token_match:
        return _FAILURE_TOKENS.search(stdout) is None
    return "FAILED" not in stdout and "ERROR" not in stdout


def pass_predicate(outcome: ExecutionOutcome, token_match: bool = True) -> bool:
    """True iff the streams look clean AND the process exited 0 in time."""
    return (
        stream_pass(outcome.stdout, outcome.stderr, token_match=token_match)
        and outcome.exit_status == 0
        and not outcome.timed_out
    )
