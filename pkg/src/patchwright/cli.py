"""Operator entry point: run a task, serve the API, index a repository,
inspect episodic memory, evaluate a suite, run ablations.

stdout carries machine-readable JSON only; human-facing text goes to stderr.
Exit codes: 0 success/PASS, 1 FAIL, 2 configuration or infrastructure error.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import Optional

import click

from .agents import ModelParams, RemoteBackend, ScriptedBackend
from .core.errors import ConfigError, PatchwrightError
from .core.types import Task
from .eval_harness import (
    EmptyReportError,
    FailureClass,
    ResolutionRecord,
    evaluate_patch,
    load_suite,
    resolve_rate,
    run_ablation_suite,
    standard_ablation_configs,
)
from .orchestrator import AppConfig, PipelineDeps, RunConfig, load_app_config, run_pipeline
from .retrieval import (
    EpisodicMemory,
    RepositoryIndex,
    RepoWatcher,
    StoreError,
    VectorStore,
    build_provider,
)
from .sandbox import ContainerExecutor, DockerClient, SubprocessExecutor

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2

REMOTE_TOKEN_ENV = "PATCHWRIGHT_API_KEY"


def log(message: str) -> None:
    click.echo(message, err=True)


def emit_json(payload) -> None:
    click.echo(json.dumps(payload, indent=2))


class CliState:
    def __init__(self, config: AppConfig, backend_spec: Optional[str], json_only: bool):
        self.config = config
        self.backend_spec = backend_spec or config.backend_spec
        self.json_only = json_only

    def build_backend(self):
        spec = self.backend_spec
        if spec.startswith("scripted:"):
            path = Path(spec.split(":", 1)[1])
            if not path.exists():
                raise ConfigError(f"scripted backend fixture not found: {path}")
            entries = json.loads(path.read_text(encoding="utf-8"))
            return ScriptedBackend.from_spec(entries)
        if spec == "remote":
            if not os.environ.get(REMOTE_TOKEN_ENV):
                raise ConfigError(
                    f"remote backend requires the {REMOTE_TOKEN_ENV} environment variable"
                )
            return RemoteBackend(
                base_url=self.config.remote_base_url, model=self.config.remote_model
            )
        raise ConfigError(f"unknown backend spec: {spec!r} (use scripted:<path> or remote)")

    def build_executor(self):
        if self.config.sandbox_executor == "subprocess":
            return SubprocessExecutor()
        client = DockerClient(socket_path=self.config.docker_socket)
        return ContainerExecutor(client, image=self.config.run.sandbox_image)

    def embedding_provider(self):
        return build_provider(
            self.config.embedding_provider, dimension=self.config.embedding_dimension
        )

    def open_memory(self, create: bool = True) -> EpisodicMemory:
        provider = self.embedding_provider()
        path = Path(self.config.memory_store_path or ".patchwright/memory")
        if (path / "manifest.json").exists():
            store = VectorStore.open(path, backend=self.config.retrieval_backend)
            if store.provider_id != provider.provider_id:
                raise ConfigError(
                    f"memory store at {path} was built with provider "
                    f"{store.provider_id!r}, config wants {provider.provider_id!r}"
                )
        elif create:
            store = VectorStore(
                dimension=provider.dimension,
                provider_id=provider.provider_id,
                path=path,
                backend=self.config.retrieval_backend,
            )
        else:
            raise ConfigError(f"no memory store at {path}")
        return EpisodicMemory(store, provider)

    def open_repo_index(self, create: bool = True) -> Optional[RepositoryIndex]:
        provider = self.embedding_provider()
        path = Path(self.config.repo_index_path or ".patchwright/repo_index")
        if (path / "manifest.json").exists():
            store = VectorStore.open(path, backend=self.config.retrieval_backend)
        elif create:
            store = VectorStore(
                dimension=provider.dimension,
                provider_id=provider.provider_id,
                path=path,
                backend=self.config.retrieval_backend,
            )
        else:
            return None
        return RepositoryIndex(store, provider)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="YAML config file")
@click.option("--backend", "backend_spec", default=None, help="scripted:<fixture-path> or remote")
@click.option("--seed", type=int, default=None, help="model seed (default 42)")
@click.option("--temperature", type=float, default=None, help="model temperature (default 0.0)")
@click.option("--json", "json_only", is_flag=True, help="suppress human-readable stderr tables")
@click.pass_context
def main(ctx, config_path, backend_spec, seed, temperature, json_only):
    """Execution-grounded multi-agent pipeline for verified code patches."""
    try:
        config = load_app_config(config_path)
        if seed is not None or temperature is not None:
            model = config.run.model
            model = ModelParams(
                temperature=model.temperature if temperature is None else temperature,
                seed=model.seed if seed is None else seed,
                max_output_tokens=model.max_output_tokens,
                max_input_tokens=model.max_input_tokens,
            )
            config = dataclasses.replace(
                config, run=dataclasses.replace(config.run, model=model)
            )
    except (ConfigError, OSError) as exc:
        log(f"error: {exc}")
        ctx.exit(EXIT_ERROR)
    ctx.obj = CliState(config, backend_spec, json_only)


def _load_task(task_file: Optional[str], description: Optional[str], context_files) -> Task:
    if task_file:
        path = Path(task_file)
        if not path.exists():
            raise ConfigError(f"task file not found: {path}")
        payload = json.loads(path.read_text(encoding="utf-8"))
        files = payload.get("context_files", [])
        pairs = tuple(
            (f["path"], f["content"]) if isinstance(f, dict) else (f[0], f[1]) for f in files
        )
        return Task(
            id=str(payload.get("id", path.stem)),
            description=payload["description"],
            context_files=pairs,
        )
    if not description:
        raise ConfigError("provide a task file or --description")
    pairs = []
    for spec in context_files:
        file_path = Path(spec)
        if not file_path.exists():
            raise ConfigError(f"context file not found: {file_path}")
        pairs.append((file_path.name, file_path.read_text(encoding="utf-8")))
    return Task(id="cli-task", description=description, context_files=tuple(pairs))


@main.command()
@click.argument("task_file", required=False)
@click.option("--description", default=None, help="inline task description")
@click.option("--context-file", "context_files", multiple=True, help="file added to the task context")
@click.option("--no-memory", is_flag=True, help="skip episodic memory retrieval and persistence")
@click.pass_obj
def run(state: CliState, task_file, description, context_files, no_memory):
    """Run one task through the pipeline; RunResult JSON on stdout."""
    try:
        task = _load_task(task_file, description, context_files)
        backend = state.build_backend()
        executor = state.build_executor()
        memory = None if no_memory else state.open_memory()
        repo_index = state.open_repo_index(create=False)
    except (ConfigError, StoreError, PatchwrightError, ValueError, KeyError) as exc:
        log(f"error: {exc}")
        sys.exit(EXIT_ERROR)
    deps = PipelineDeps(
        backend=backend, executor=executor, memory=memory, repo_index=repo_index
    )
    log(f"running task {task.id!r}")
    result = run_pipeline(task, state.config.run, deps)
    emit_json(result.to_dict())
    log(f"verdict: {result.verdict.value.value} ({result.verdict.rationale[:120]})")
    if result.infrastructure_failure:
        sys.exit(EXIT_ERROR)
    sys.exit(EXIT_PASS if result.passed else EXIT_FAIL)


@main.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_obj
def serve(state: CliState, host, port):
    """Serve the run-submission and event-streaming API."""
    import uvicorn

    from .service import create_app

    try:
        backend = state.build_backend()
        executor = state.build_executor()
        memory = state.open_memory()
        repo_index = state.open_repo_index(create=False)
    except (ConfigError, StoreError) as exc:
        log(f"error: {exc}")
        sys.exit(EXIT_ERROR)

    def runner(task, emit):
        deps = PipelineDeps(
            backend=backend,
            executor=executor,
            memory=memory,
            repo_index=repo_index,
            emit=emit,
        )
        return run_pipeline(task, state.config.run, deps)

    app = create_app(
        runner,
        max_active_runs=state.config.service_max_active_runs,
        pool_size=state.config.sandbox_pool_size,
    )
    uvicorn.run(
        app,
        host=host or state.config.service_host,
        port=port or state.config.service_port,
        log_level="warning",
    )


@main.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--watch", is_flag=True, help="keep watching for changes until interrupted")
@click.pass_obj
def index(state: CliState, root, watch):
    """Index a repository's source files into the retrieval store."""
    try:
        repo_index = state.open_repo_index()
        summary = repo_index.index_repository(root)
    except (ConfigError, StoreError, PatchwrightError) as exc:
        log(f"error: {exc}")
        sys.exit(EXIT_ERROR)
    emit_json(
        {
            "indexed": summary.indexed,
            "unchanged": summary.unchanged,
            "removed": summary.removed,
            "skipped": [{"path": p, "reason": r} for p, r in summary.skipped],
        }
    )
    if watch:
        watcher = RepoWatcher(
            root,
            repo_index,
            settle_ms=state.config.watcher_settle_ms,
            poll_ms=state.config.watcher_poll_ms,
        ).start()
        log(f"watching {root} (backend: {watcher.backend}); Ctrl-C to stop")
        try:
            import time

            while True:
                time.sleep(1)
        except KeyboardInterrupt:
            watcher.stop()
    sys.exit(EXIT_PASS)


@main.group()
def memory():
    """Inspect the episodic memory store."""


@memory.command("stats")
@click.pass_obj
def memory_stats(state: CliState):
    try:
        store = state.open_memory()
    except (ConfigError, StoreError) as exc:
        log(f"error: {exc}")
        sys.exit(EXIT_ERROR)
    emit_json({"count": len(store), "dimension": store.store.dimension, "provider": store.store.provider_id})


@memory.command("list")
@click.pass_obj
def memory_list(state: CliState):
    try:
        store = state.open_memory()
    except (ConfigError, StoreError) as exc:
        log(f"error: {exc}")
        sys.exit(EXIT_ERROR)
    entries = []
    for record_id in store.store.ids():
        record = store.store.get(record_id)
        task_text = json.loads(record.payload).get("task", "")
        entries.append({"id": record_id, "task": task_text[:80]})
    emit_json(entries)


@memory.command("query")
@click.argument("text")
@click.option("-k", type=int, default=None, help="number of hits (default retrieval.k)")
@click.pass_obj
def memory_query(state: CliState, text, k):
    try:
        store = state.open_memory()
    except (ConfigError, StoreError) as exc:
        log(f"error: {exc}")
        sys.exit(EXIT_ERROR)
    hits = store.query(text, k or state.config.run.retrieval_k)
    emit_json(
        [
            {
                "id": hit.record_id,
                "similarity": hit.similarity,
                "task": json.loads(hit.payload).get("task", "")[:120],
            }
            for hit in hits
        ]
    )


def _patch_for(instance, mode, patches_dir, scripts_dir, state, executor):
    if mode == "gold":
        return instance.gold_patch
    if mode == "patches":
        for suffix in (".patch", ".diff"):
            candidate = Path(patches_dir) / f"{instance.instance_id}{suffix}"
            if candidate.exists():
                return candidate.read_text(encoding="utf-8")
        return None
    # pipeline mode: scripted backend per instance
    from .eval_harness import run_instance_pipeline

    script = Path(scripts_dir) / f"{instance.instance_id}.json"
    if not script.exists():
        raise ConfigError(f"no script for instance {instance.instance_id}: {script}")
    backend = ScriptedBackend.from_spec(json.loads(script.read_text(encoding="utf-8")))
    _, patch = run_instance_pipeline(instance, state.config.run, backend, executor)
    return patch


@main.command("eval")
@click.argument("suite_path", type=click.Path())
@click.option("--gold", "mode", flag_value="gold", help="evaluate each instance's gold patch")
@click.option("--patches", "patches_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="directory of <instance_id>.patch files")
@click.option("--scripts", "scripts_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="run the pipeline with per-instance scripted backends")
@click.pass_obj
def eval_command(state: CliState, suite_path, mode, patches_dir, scripts_dir):
    """Evaluate patches against a benchmark suite (JSON-lines)."""
    if patches_dir:
        mode = "patches"
    elif scripts_dir:
        mode = "pipeline"
    elif mode != "gold":
        log("error: choose one of --gold, --patches DIR, --scripts DIR")
        sys.exit(EXIT_ERROR)
    try:
        instances = load_suite(suite_path)
        executor = state.build_executor()
        if not instances:
            raise EmptyReportError("suite is empty")
    except PatchwrightError as exc:
        log(f"error: {exc}")
        sys.exit(EXIT_ERROR)

    records = []
    for instance in instances:
        try:
            patch = _patch_for(instance, mode, patches_dir, scripts_dir, state, executor)
            record = evaluate_patch(instance, patch, executor, limits=state.config.run.limits)
        except Exception as exc:  # noqa: BLE001 - keep evaluating
            record = ResolutionRecord(
                instance_id=instance.instance_id,
                patch_applied=False,
                outcomes=None,
                resolved=False,
                failure_class=FailureClass.INFRA,
                detail=str(exc),
            )
        records.append(record)
        log(f"{instance.instance_id}: resolved={record.resolved} class={record.failure_class}")

    resolve_pct, patch_pct = resolve_rate(records)
    report = {
        "total": len(records),
        "resolved": sum(1 for r in records if r.resolved),
        "resolve_rate_pct": resolve_pct,
        "patch_rate_pct": patch_pct,
        "records": [r.to_dict() for r in records],
    }
    emit_json(report)
    if not state.json_only:
        width = max(len(r.instance_id) for r in records)
        log(f"{'instance'.ljust(width)}  resolved  applied  class")
        for r in records:
            klass = r.failure_class.value if r.failure_class else "-"
            log(
                f"{r.instance_id.ljust(width)}  {str(r.resolved).ljust(8)}"
                f"  {str(r.patch_applied).ljust(7)}  {klass}"
            )
        log(f"resolve rate: {resolve_pct:.1f}%  patch rate: {patch_pct:.1f}%")
    infra = any(r.failure_class is FailureClass.INFRA for r in records)
    sys.exit(EXIT_ERROR if infra else EXIT_PASS)


@main.command()
@click.argument("suite_path", type=click.Path())
@click.option("--scripts", "scripts_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.pass_obj
def ablate(state: CliState, suite_path, scripts_dir):
    """Run the one-agent-at-a-time ablation sweep over a suite."""
    try:
        instances = load_suite(suite_path)
        if not instances:
            raise EmptyReportError("suite is empty")
        executor = state.build_executor()
        configs = standard_ablation_configs(state.config.run)
    except PatchwrightError as exc:
        log(f"error: {exc}")
        sys.exit(EXIT_ERROR)

    def backend_factory(instance):
        script = Path(scripts_dir) / f"{instance.instance_id}.json"
        return ScriptedBackend.from_spec(json.loads(script.read_text(encoding="utf-8")))

    report = run_ablation_suite(
        instances, configs, backend_factory, executor, limits=state.config.run.limits
    )
    emit_json(report.to_dict())
    if not state.json_only:
        log(report.to_text())
    failures = any(row.run_errors for row in report.rows)
    sys.exit(EXIT_ERROR if failures else EXIT_PASS)


@main.command()
@click.argument("dest", type=click.Path())
def synthetic(dest):
    """Materialize the bundled synthetic benchmark into DEST."""
    from .eval_harness import materialize_suite

    suite_path, scripts_path = materialize_suite(Path(dest))
    emit_json({"suite": str(suite_path), "scripts": str(scripts_path)})
    sys.exit(EXIT_PASS)


if __name__ == "__main__":
    main()
