"""Declarative configuration: one YAML file covering every module's knobs,
flag overrides on top, environment variables for secrets only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import FrozenSet, Optional, Union

import yaml

from ..agents.backend import ModelParams
from ..core.errors import ConfigError
from ..core.types import AgentRole
from ..sandbox.limits import MIB, ResourceLimits

ALL_ROLES = frozenset(r.value for r in AgentRole)


@dataclass(frozen=True)
class Pricing:
    input_per_million: float = 2.50
    output_per_million: float = 10.00

    def __post_init__(self) -> None:
        if self.input_per_million < 0 or self.output_per_million < 0:
            raise ConfigError("pricing rates must be non-negative")


@dataclass(frozen=True)
class RunConfig:
    n_retry: int = 3
    retrieval_k: int = 5
    disabled_agents: FrozenSet[str] = frozenset()
    model: ModelParams = field(default_factory=ModelParams)
    limits: ResourceLimits = field(default_factory=ResourceLimits)
    pricing: Pricing = field(default_factory=Pricing)
    sandbox_image: str = "python:3.10-slim"
    context_char_budget: int = 4000
    results_entry_chars: int = 800
    results_total_chars: int = 4000
    stagnation_detection: bool = True

    def __post_init__(self) -> None:
        if self.n_retry < 0:
            raise ConfigError("n_retry must be >= 0")
        unknown = self.disabled_agents - ALL_ROLES
        if unknown:
            raise ConfigError(f"unknown agents in disabled_agents: {sorted(unknown)}")
        if self.disabled_agents >= ALL_ROLES:
            raise ConfigError("cannot disable every agent")
        if AgentRole.CODER.value in self.disabled_agents:
            raise ConfigError("the coder cannot be disabled; nothing would produce code")

    def effective_n_retry(self) -> int:
        if AgentRole.DEBUGGER.value in self.disabled_agents:
            return 0
        return self.n_retry

    def disabling(self, *roles: str) -> "RunConfig":
        return replace(self, disabled_agents=frozenset(self.disabled_agents | set(roles)))


@dataclass(frozen=True)
class AppConfig:
    run: RunConfig = field(default_factory=RunConfig)
    embedding_provider: str = "deterministic"
    embedding_dimension: int = 256
    retrieval_backend: str = "exact"
    watcher_settle_ms: int = 2000
    watcher_poll_ms: int = 1000
    memory_store_path: Optional[str] = None
    repo_index_path: Optional[str] = None
    sandbox_executor: str = "container"
    docker_socket: str = "/var/run/docker.sock"
    sandbox_pool_size: int = 4
    service_host: str = "127.0.0.1"
    service_port: int = 8233
    service_max_active_runs: int = 8
    backend_spec: str = "remote"
    remote_base_url: str = "https://api.openai.com/v1"
    remote_model: str = "gpt-4o-2024-08-06"

    def __post_init__(self) -> None:
        if self.sandbox_executor not in ("container", "subprocess"):
            raise ConfigError(f"unknown sandbox executor: {self.sandbox_executor!r}")


def _get(mapping: dict, section: str, key: str, default):
    return (mapping.get(section) or {}).get(key, default)


def load_app_config(path: Optional[Union[str, Path]] = None) -> AppConfig:
    """Read the YAML config file; missing file with explicit path is an error."""
    raw: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must contain a mapping")

    model = ModelParams(
        temperature=float(_get(raw, "model", "temperature", 0.0)),
        seed=int(_get(raw, "model", "seed", 42)),
        max_output_tokens=int(_get(raw, "model", "max_output_tokens", 4096)),
        max_input_tokens=int(_get(raw, "model", "max_input_tokens", 16384)),
    )
    limits = ResourceLimits(
        memory_bytes=int(_get(raw, "sandbox", "memory_mb", 512)) * MIB,
        cpu_quota=float(_get(raw, "sandbox", "cpu", 0.5)),
        pid_cap=int(_get(raw, "sandbox", "pids", 64)),
        timeout_seconds=float(_get(raw, "sandbox", "timeout_s", 30)),
    )
    pricing = Pricing(
        input_per_million=float(_get(raw, "pricing", "input_per_million", 2.50)),
        output_per_million=float(_get(raw, "pricing", "output_per_million", 10.00)),
    )
    run = RunConfig(
        n_retry=int(_get(raw, "orchestrator", "n_retry", 3)),
        retrieval_k=int(_get(raw, "retrieval", "k", 5)),
        disabled_agents=frozenset(_get(raw, "orchestrator", "disabled_agents", []) or []),
        model=model,
        limits=limits,
        pricing=pricing,
        sandbox_image=str(_get(raw, "sandbox", "image", "python:3.10-slim")),
        context_char_budget=int(_get(raw, "retrieval", "context_char_budget", 4000)),
        results_entry_chars=int(_get(raw, "orchestrator", "results_entry_chars", 800)),
        results_total_chars=int(_get(raw, "orchestrator", "results_total_chars", 4000)),
        stagnation_detection=bool(_get(raw, "orchestrator", "stagnation_detection", True)),
    )
    return AppConfig(
        run=run,
        embedding_provider=str(_get(raw, "embedding", "provider", "deterministic")),
        embedding_dimension=int(_get(raw, "embedding", "dimension", 256)),
        retrieval_backend=str(_get(raw, "retrieval", "backend", "exact")),
        watcher_settle_ms=int(_get(raw, "watcher", "settle_ms", 2000)),
        watcher_poll_ms=int(_get(raw, "watcher", "poll_ms", 1000)),
        memory_store_path=_get(raw, "stores", "memory_path", None),
        repo_index_path=_get(raw, "stores", "repo_index_path", None),
        sandbox_executor=str(_get(raw, "sandbox", "executor", "container")),
        docker_socket=str(_get(raw, "sandbox", "docker_socket", "/var/run/docker.sock")),
        sandbox_pool_size=int(_get(raw, "sandbox", "pool_size", 4)),
        service_host=str(_get(raw, "service", "host", "127.0.0.1")),
        service_port=int(_get(raw, "service", "port", 8233)),
        service_max_active_runs=int(_get(raw, "service", "max_active_runs", 8)),
        backend_spec=str(_get(raw, "model", "backend", "remote")),
        remote_base_url=str(_get(raw, "model", "base_url", "https://api.openai.com/v1")),
        remote_model=str(_get(raw, "model", "name", "gpt-4o-2024-08-06")),
    )
