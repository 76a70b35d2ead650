"""Per-run event log with lossless replay.

One writer (the run's pipeline), any number of readers. The log itself is the
buffer: readers pull by sequence number, so a slow consumer can never block
the pipeline or lose events, and reconnecting at any offset resumes exactly.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional

TERMINAL_KIND = "run_completed"


@dataclass(frozen=True)
class RunEvent:
    run_id: str
    seq: int
    kind: str
    payload: dict
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
            "timestamp": self.timestamp,
        }

    def sse_frame(self) -> str:
        data = json.dumps({"run_id": self.run_id, "payload": self.payload})
        return f"id: {self.seq}\nevent: {self.kind}\ndata: {data}\n\n"


class ReplayLog:
    def __init__(self, run_id: str):
        self.run_id = run_id
        self._events: List[RunEvent] = []
        self._condition = threading.Condition()
        self._terminal = False

    def append(self, kind: str, payload: dict) -> RunEvent:
        with self._condition:
            if self._terminal:
                raise RuntimeError(f"run {self.run_id} already emitted its terminal event")
            event = RunEvent(
                run_id=self.run_id,
                seq=len(self._events),
                kind=kind,
                payload=payload,
                timestamp=time.time(),
            )
            self._events.append(event)
            if kind == TERMINAL_KIND:
                self._terminal = True
            self._condition.notify_all()
            return event

    @property
    def terminal(self) -> bool:
        with self._condition:
            return self._terminal

    def __len__(self) -> int:
        with self._condition:
            return len(self._events)

    def snapshot(self) -> List[RunEvent]:
        with self._condition:
            return list(self._events)

    def read_from(
        self,
        from_seq: int = 0,
        predicate: Optional[Callable[[RunEvent], bool]] = None,
        poll_seconds: float = 0.1,
    ) -> Iterator[RunEvent]:
        """Yield events with seq >= from_seq passing `predicate`, following the
        live tail until the terminal event has been delivered.
        """
        cursor = max(from_seq, 0)
        while True:
            with self._condition:
                while cursor >= len(self._events) and not self._terminal:
                    self._condition.wait(timeout=poll_seconds)
                batch = self._events[cursor:]
                done = self._terminal and cursor + len(batch) >= len(self._events)
            for event in batch:
                if predicate is None or predicate(event):
                    yield event
            cursor += len(batch)
            if done:
                return


def default_token_filter(agents: Optional[set] = None) -> Callable[[RunEvent], bool]:
    """Token events are filtered by agent (coder-only by default); every other
    event kind always passes.
    """
    allowed = agents if agents is not None else {"coder"}

    def predicate(event: RunEvent) -> bool:
        if event.kind != "token":
            return True
        if "all" in allowed:
            return True
        return event.payload.get("agent") in allowed

    return predicate
