"""Live repository index: one embedded document per source file, kept fresh
either by filesystem events (watchdog) or by periodic polling.

Unchanged files (same content hash) are never re-embedded. After any event
sequence settles, the incremental index must be state-equal to a from-scratch
rebuild; the tests hold it to that.
"""

from __future__ import annotations

import hashlib
import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from ..core.errors import PathError
from .embedding import EmbeddingProvider
from .store import RetrievalHit, VectorStore

logger = logging.getLogger(__name__)

DEFAULT_EXTENSIONS = (".py", ".md", ".txt", ".rst", ".toml", ".cfg", ".ini", ".json", ".yaml", ".yml")
DEFAULT_EXCLUDE_DIRS = (".git", "__pycache__", ".venv", "node_modules", ".pytest_cache")
EMBED_CONTENT_CAP = 8192


@dataclass
class IndexSummary:
    indexed: int = 0
    unchanged: int = 0
    removed: int = 0
    skipped: List[Tuple[str, str]] = field(default_factory=list)


def _content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _is_binary(data: bytes) -> bool:
    return b"\x00" in data[:8192]


class RepositoryIndex:
    def __init__(
        self,
        store: VectorStore,
        provider: EmbeddingProvider,
        extensions: Sequence[str] = DEFAULT_EXTENSIONS,
        exclude_dirs: Sequence[str] = DEFAULT_EXCLUDE_DIRS,
    ):
        if store.dimension != provider.dimension:
            raise ValueError(
                f"store dimension {store.dimension} != provider dimension {provider.dimension}"
            )
        self.store = store
        self.provider = provider
        self.extensions = tuple(extensions)
        self.exclude_dirs = set(exclude_dirs)

    def eligible(self, path: Path) -> bool:
        if path.suffix not in self.extensions:
            return False
        return not any(part in self.exclude_dirs for part in path.parts)

    def _iter_source_files(self, root: Path) -> Iterable[Path]:
        for path in sorted(root.rglob("*")):
            if path.is_file() and self.eligible(path.relative_to(root)):
                yield path

    def index_repository(self, root: Path | str) -> IndexSummary:
        """Full sweep: embed new/changed files, drop records for missing ones."""
        root = Path(root)
        if not root.is_dir():
            raise PathError(f"repository root does not exist: {root}")
        summary = IndexSummary()
        seen: Set[str] = set()
        for path in self._iter_source_files(root):
            rel = path.relative_to(root).as_posix()
            seen.add(rel)
            self._index_file(root, rel, summary)
        for record_id in self.store.ids():
            if record_id not in seen:
                self.store.delete(record_id)
                summary.removed += 1
        return summary

    def _index_file(self, root: Path, rel: str, summary: IndexSummary) -> None:
        path = root / rel
        try:
            data = path.read_bytes()
        except OSError as exc:
            summary.skipped.append((rel, f"unreadable: {exc.__class__.__name__}"))
            return
        if _is_binary(data):
            summary.skipped.append((rel, "binary"))
            return
        digest = _content_hash(data)
        existing = self.store.get(rel)
        if existing is not None and existing.content_hash == digest:
            summary.unchanged += 1
            return
        text = data.decode("utf-8", errors="replace")
        vector = self.provider.embed(f"{rel}\n{text[:EMBED_CONTENT_CAP]}" if text else rel)
        self.store.add(rel, vector, payload=text, content_hash=digest, created_at=time.time())
        summary.indexed += 1

    def refresh_paths(self, root: Path, rels: Iterable[str]) -> IndexSummary:
        """Re-examine specific paths after change events."""
        summary = IndexSummary()
        for rel in rels:
            path = root / rel
            if path.is_file():
                if self.eligible(Path(rel)):
                    self._index_file(root, rel, summary)
            elif self.store.delete(rel):
                summary.removed += 1
        return summary

    def query(self, text: str, k: int) -> List[RetrievalHit]:
        if k <= 0 or len(self.store) == 0:
            return []
        return self.store.top_k(self.provider.embed(text), k)


class RepoWatcher:
    """Keeps a RepositoryIndex synchronized with a directory tree.

    Prefers filesystem events; degrades to polling when the event backend
    cannot start. `backend` reports which mode is active.
    """

    def __init__(
        self,
        root: Path | str,
        index: RepositoryIndex,
        settle_ms: int = 2000,
        poll_ms: int = 1000,
        force_polling: bool = False,
    ):
        self.root = Path(root)
        self.index = index
        self.settle_s = settle_ms / 1000.0
        self.poll_s = poll_ms / 1000.0
        self.backend = "poll" if force_polling else "events"
        self._events: "queue.Queue[str]" = queue.Queue()
        self._stop = threading.Event()
        self._observer = None
        self._worker: Optional[threading.Thread] = None

    def start(self) -> "RepoWatcher":
        if self.backend == "events":
            try:
                self._observer = self._start_observer()
            except Exception as exc:  # pragma: no cover - backend-specific
                logger.warning("event watcher unavailable (%s); falling back to polling", exc)
                self.backend = "poll"
        target = self._run_events if self.backend == "events" else self._run_polling
        self._worker = threading.Thread(target=target, name="repo-watcher", daemon=True)
        self._worker.start()
        return self

    def _start_observer(self):
        from watchdog.events import FileSystemEventHandler
        from watchdog.observers import Observer

        events = self._events
        # Only mutations; 'opened'/'closed_no_write' fire when the indexer
        # itself reads a file and would feed back into an endless refresh loop.
        mutating = {"created", "modified", "deleted", "moved", "closed"}

        class Handler(FileSystemEventHandler):
            def on_any_event(self, event):
                if event.is_directory or event.event_type not in mutating:
                    return
                events.put(event.src_path)
                dest = getattr(event, "dest_path", "")
                if dest:
                    events.put(dest)

        observer = Observer()
        observer.schedule(Handler(), str(self.root), recursive=True)
        observer.start()
        return observer

    def _to_rel(self, raw: str) -> Optional[str]:
        try:
            return Path(raw).resolve().relative_to(self.root.resolve()).as_posix()
        except ValueError:
            return None

    def _run_events(self) -> None:
        pending: Set[str] = set()
        last_event = 0.0
        while not self._stop.is_set():
            try:
                raw = self._events.get(timeout=self.settle_s / 4 if pending else 0.2)
                rel = self._to_rel(raw)
                if rel is not None:
                    pending.add(rel)
                last_event = time.monotonic()
                continue
            except queue.Empty:
                pass
            if pending and (time.monotonic() - last_event) >= min(self.settle_s / 2, 0.5):
                batch, pending = pending, set()
                self.index.refresh_paths(self.root, sorted(batch))
        if pending:
            self.index.refresh_paths(self.root, sorted(pending))

    def _run_polling(self) -> None:
        while not self._stop.is_set():
            try:
                self.index.index_repository(self.root)
            except PathError:
                pass
            self._stop.wait(self.poll_s)

    def stop(self) -> None:
        self._stop.set()
        if self._observer is not None:
            self._observer.stop()
            self._observer.join(timeout=5)
        if self._worker is not None:
            self._worker.join(timeout=5)
