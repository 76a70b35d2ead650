"""Resource limits applied to every sandboxed run. Networking is always
disabled; there is deliberately no way to switch it back on.
"""

from __future__ import annotations

from dataclasses import dataclass

MIB = 1024 * 1024


@dataclass(frozen=True)
class ResourceLimits:
    memory_bytes: int = 512 * MIB
    cpu_quota: float = 0.5
    pid_cap: int = 64
    timeout_seconds: float = 30.0
    network: str = "disabled"

    def __post_init__(self) -> None:
        if self.memory_bytes <= 0 or self.cpu_quota <= 0 or self.pid_cap <= 0:
            raise ValueError("resource limits must be positive")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout must be positive")
        if self.network != "disabled":
            raise ValueError("networking cannot be enabled for sandboxed runs")
