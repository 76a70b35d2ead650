"""Network surface: run submission plus live event streaming over SSE and
WebSocket, backed by per-run replay logs.
"""

from .app import PipelineRunner, RunRegistry, TaskSpec, create_app
from .events import ReplayLog, RunEvent, TERMINAL_KIND, default_token_filter

__all__ = [
    "PipelineRunner",
    "ReplayLog",
    "RunEvent",
    "RunRegistry",
    "TERMINAL_KIND",
    "TaskSpec",
    "create_app",
    "default_token_filter",
]
