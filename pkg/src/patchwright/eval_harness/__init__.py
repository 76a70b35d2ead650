"""Benchmark evaluation: the five-step resolution protocol, resolve-rate
reports, ablation sweeps, and the bundled synthetic suite.
"""

from .ablation import (
    AblationReport,
    AblationRow,
    STANDARD_ABLATIONS,
    patch_from_result,
    run_ablation_suite,
    run_instance_pipeline,
    standard_ablation_configs,
    task_for_instance,
)
from .evaluate import (
    EVAL_TIMEOUT_SECONDS,
    EmptyReportError,
    FailureClass,
    ReportError,
    ResolutionRecord,
    apply_patch_to_workspace,
    evaluate_patch,
    materialize_workspace,
    resolve_rate,
)
from .suite import BenchmarkInstance, DuplicateError, SuiteLoadError, load_suite, parse_instance
from .synthetic import (
    CONFIG_LABELS,
    SyntheticCase,
    materialize_suite,
    repairable,
    synthetic_cases,
)

__all__ = [
    "AblationReport",
    "AblationRow",
    "BenchmarkInstance",
    "CONFIG_LABELS",
    "DuplicateError",
    "EVAL_TIMEOUT_SECONDS",
    "EmptyReportError",
    "FailureClass",
    "ReportError",
    "ResolutionRecord",
    "STANDARD_ABLATIONS",
    "SuiteLoadError",
    "SyntheticCase",
    "apply_patch_to_workspace",
    "evaluate_patch",
    "load_suite",
    "materialize_suite",
    "materialize_workspace",
    "parse_instance",
    "patch_from_result",
    "repairable",
    "resolve_rate",
    "run_ablation_suite",
    "run_instance_pipeline",
    "standard_ablation_configs",
    "synthetic_cases",
    "task_for_instance",
]
