"""HTTP surface: submit runs, stream their events over SSE or WebSocket,
fetch terminal results.

The app is built around an injected `runner` callable so the same service
code serves scripted offline runs and real backends alike.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional

from fastapi import FastAPI, HTTPException, Query, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from ..core.types import Task
from ..orchestrator.pipeline import EventEmitter, RunResult
from .events import ReplayLog, RunEvent, TERMINAL_KIND, default_token_filter

PipelineRunner = Callable[[Task, EventEmitter], RunResult]


class ContextFileSpec(BaseModel):
    path: str
    content: str


class TaskSpec(BaseModel):
    id: Optional[str] = None
    description: str = Field(min_length=1)
    context_files: List[ContextFileSpec] = Field(default_factory=list)

    def to_task(self, run_id: str) -> Task:
        return Task(
            id=self.id or run_id,
            description=self.description,
            context_files=tuple((f.path, f.content) for f in self.context_files),
        )


class RunRecord:
    def __init__(self, run_id: str):
        self.run_id = run_id
        self.log = ReplayLog(run_id)
        self.result: Optional[RunResult] = None


class RunRegistry:
    def __init__(self, runner: PipelineRunner, max_active_runs: int = 8, pool_size: int = 4):
        self._runner = runner
        self._max_active = max_active_runs
        self._records: Dict[str, RunRecord] = {}
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=pool_size, thread_name_prefix="run")

    def active_count(self) -> int:
        with self._lock:
            return sum(1 for r in self._records.values() if not r.log.terminal)

    def get(self, run_id: str) -> Optional[RunRecord]:
        with self._lock:
            return self._records.get(run_id)

    def submit(self, spec: TaskSpec) -> str:
        if self.active_count() >= self._max_active:
            raise CapacityError(f"at most {self._max_active} concurrent runs")
        run_id = uuid.uuid4().hex[:12]
        record = RunRecord(run_id)
        with self._lock:
            self._records[run_id] = record
        task = spec.to_task(run_id)
        self._pool.submit(self._execute, record, task)
        return run_id

    def _execute(self, record: RunRecord, task: Task) -> None:
        try:
            record.result = self._runner(task, record.log.append)
        except Exception as exc:  # noqa: BLE001 - the log must still terminate
            if not record.log.terminal:
                record.log.append("error", {"message": f"{exc.__class__.__name__}: {exc}"})
        finally:
            if not record.log.terminal:
                record.log.append(TERMINAL_KIND, {"task_id": task.id, "verdict": "FAIL"})

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)


class CapacityError(Exception):
    pass


def _parse_agent_filter(agents: Optional[str]):
    if agents is None:
        return default_token_filter()
    names = {a.strip() for a in agents.split(",") if a.strip()}
    return default_token_filter(names or None)


def create_app(runner: PipelineRunner, max_active_runs: int = 8, pool_size: int = 4) -> FastAPI:
    app = FastAPI(title="patchwright", version="0.1.0")
    registry = RunRegistry(runner, max_active_runs=max_active_runs, pool_size=pool_size)
    app.state.registry = registry

    @app.exception_handler(CapacityError)
    async def capacity_handler(request: Request, exc: CapacityError):
        return JSONResponse(status_code=429, content={"detail": str(exc)})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "active_runs": registry.active_count()}

    @app.post("/runs", status_code=202)
    async def submit_run(spec: TaskSpec):
        run_id = registry.submit(spec)
        return {"run_id": run_id}

    @app.get("/runs/{run_id}")
    async def get_result(run_id: str):
        record = registry.get(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown run: {run_id}")
        if not record.log.terminal:
            return JSONResponse(
                status_code=409,
                content={"detail": "run still active", "current_seq": len(record.log)},
            )
        if record.result is None:
            return JSONResponse(
                status_code=500, content={"detail": "run terminated without a result"}
            )
        return record.result.to_dict()

    @app.get("/runs/{run_id}/events")
    async def stream_events(
        run_id: str,
        request: Request,
        from_seq: int = Query(default=0, ge=0),
        agents: Optional[str] = Query(default=None),
    ):
        record = registry.get(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown run: {run_id}")
        last_event_id = request.headers.get("Last-Event-ID")
        if last_event_id is not None:
            try:
                from_seq = int(last_event_id) + 1
            except ValueError:
                pass
        predicate = _parse_agent_filter(agents)

        def frames():
            for event in record.log.read_from(from_seq, predicate):
                yield event.sse_frame()

        return StreamingResponse(frames(), media_type="text/event-stream")

    @app.websocket("/runs/{run_id}/ws")
    async def stream_ws(websocket: WebSocket):
        await websocket.accept()
        run_id = websocket.path_params["run_id"]
        record = registry.get(run_id)
        if record is None:
            await websocket.close(code=4404, reason=f"unknown run: {run_id}")
            return
        params = websocket.query_params
        from_seq = int(params.get("from_seq", 0))
        predicate = _parse_agent_filter(params.get("agents"))
        import anyio

        try:
            iterator = record.log.read_from(from_seq, predicate)
            while True:
                event = await anyio.to_thread.run_sync(lambda: next(iterator, None))
                if event is None:
                    break
                await websocket.send_json(event.to_dict())
            await websocket.close()
        except WebSocketDisconnect:
            pass

    return app
