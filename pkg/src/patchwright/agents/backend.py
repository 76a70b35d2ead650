"""Language-model backend abstraction.

Two implementations: a strictly deterministic scripted backend for tests and
offline runs, and a client for a chat-completions HTTP endpoint. Remote
determinism (temperature 0, fixed seed) is requested but cannot be
guaranteed; the scripted backend is the reproducibility anchor.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple

import httpx

from ..core.errors import PatchwrightError


class BackendError(PatchwrightError):
    """The model backend failed to produce a completion."""


class ScriptExhaustedError(PatchwrightError):
    """No scripted rule matches the call; the test script is incomplete."""


@dataclass(frozen=True)
class ModelParams:
    temperature: float = 0.0
    seed: int = 42
    max_output_tokens: int = 4096
    max_input_tokens: int = 16384

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.input_tokens + other.input_tokens,
            self.output_tokens + other.output_tokens,
        )


def approx_tokens(text: str) -> int:
    """Whitespace-word token approximation used for budgets and accounting."""
    return len(text.split())


def truncate_to_tokens(text: str, limit: int) -> str:
    words = text.split()
    if len(words) <= limit:
        return text
    return " ".join(words[:limit])


class ModelBackend(Protocol):
    def complete(
        self,
        system_prompt: str,
        user_input: str,
        params: ModelParams,
        role: Optional[str] = None,
    ) -> Tuple[str, TokenUsage]: ...


@dataclass
class ScriptRule:
    """One scripted response. Matches when `role` (if set) equals the calling
    agent's role and `contains` (if set) is a substring of the user input.
    `max_uses=None` means the rule can serve any number of calls.
    """

    response: str
    role: Optional[str] = None
    contains: Optional[str] = None
    max_uses: Optional[int] = None
    uses: int = 0

    def matches(self, role: Optional[str], user_input: str) -> bool:
        if self.max_uses is not None and self.uses >= self.max_uses:
            return False
        if self.role is not None and self.role != role:
            return False
        if self.contains is not None and self.contains not in user_input:
            return False
        return True


class ScriptedBackend:
    """Deterministic test double: first matching rule wins, calls recorded."""

    def __init__(self, rules: Sequence[ScriptRule]):
        if not rules:
            raise ValueError("script must contain at least one rule")
        self._rules = list(rules)
        self._lock = threading.Lock()
        self.calls: List[dict] = []

    def complete(
        self,
        system_prompt: str,
        user_input: str,
        params: ModelParams,
        role: Optional[str] = None,
    ) -> Tuple[str, TokenUsage]:
        with self._lock:
            self.calls.append({"role": role, "system": system_prompt, "input": user_input})
            for rule in self._rules:
                if rule.matches(role, user_input):
                    rule.uses += 1
                    usage = TokenUsage(
                        input_tokens=approx_tokens(system_prompt) + approx_tokens(user_input),
                        output_tokens=approx_tokens(rule.response),
                    )
                    return rule.response, usage
        raise ScriptExhaustedError(
            f"no scripted response for role={role!r}, input head={user_input[:80]!r}"
        )

    @classmethod
    def from_spec(cls, entries: Sequence[dict]) -> "ScriptedBackend":
        """Build from plain dicts (the on-disk script fixture format)."""
        rules = [
            ScriptRule(
                response=e["response"],
                role=e.get("role"),
                contains=e.get("contains"),
                max_uses=e.get("max_uses"),
            )
            for e in entries
        ]
        return cls(rules)


class RemoteBackend:
    """Chat-completions client. The auth token always comes from the
    environment; temperature and seed ride along on every request.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "PATCHWRIGHT_API_KEY",
        timeout: float = 120.0,
        client: Optional[httpx.Client] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def complete(
        self,
        system_prompt: str,
        user_input: str,
        params: ModelParams,
        role: Optional[str] = None,
    ) -> Tuple[str, TokenUsage]:
        headers = {}
        token = os.environ.get(self.api_key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_input},
            ],
            "temperature": params.temperature,
            "seed": params.seed,
            "max_tokens": params.max_output_tokens,
        }
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions", json=body, headers=headers
            )
            response.raise_for_status()
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise BackendError(f"completion request failed: {exc}") from exc
        usage = payload.get("usage", {})
        return text, TokenUsage(
            input_tokens=int(usage.get("prompt_tokens", approx_tokens(user_input))),
            output_tokens=int(usage.get("completion_tokens", approx_tokens(text))),
        )
