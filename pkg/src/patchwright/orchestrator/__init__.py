"""Pipeline orchestration: plan, dispatch, repair loop, verdict, accounting."""

from .config import ALL_ROLES, AppConfig, Pricing, RunConfig, load_app_config
from .pipeline import (
    CostReport,
    EventEmitter,
    FALLBACK_CODER_DESCRIPTION,
    PipelineDeps,
    RunResult,
    StepRecord,
    account_cost,
    apply_ablation,
    chunk_tokens,
    debug_loop,
    fallback_plan,
    results_digest,
    run_pipeline,
)

__all__ = [
    "ALL_ROLES",
    "AppConfig",
    "CostReport",
    "EventEmitter",
    "FALLBACK_CODER_DESCRIPTION",
    "PipelineDeps",
    "Pricing",
    "RunConfig",
    "RunResult",
    "StepRecord",
    "account_cost",
    "apply_ablation",
    "chunk_tokens",
    "debug_loop",
    "fallback_plan",
    "load_app_config",
    "results_digest",
    "run_pipeline",
]
