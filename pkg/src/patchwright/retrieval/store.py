"""Persistent vector store with exact cosine top-k and an optional HNSW backend.

On-disk layout, one directory per collection:

    manifest.json   {"schema": "vector-store@1", "dimension": ..,
                     "provider": .., "count": ..}
    records.jsonl   {"op": "add", "id": .., "payload": .., "vector": [..],
                     "hash": .., "created_at": ..}
                    {"op": "del", "id": ..}

The record log is append-only; deletions are tombstones replayed at open.
Reads may run concurrently; every mutation is serialized under one lock.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from ..core.errors import PatchwrightError
from .embedding import EmbeddingVector
from .hnsw import HnswIndex

MANIFEST_NAME = "manifest.json"
RECORDS_NAME = "records.jsonl"
SCHEMA = "vector-store@1"


class DimensionError(PatchwrightError):
    """Query or record dimension does not match the store's."""


class StoreError(PatchwrightError):
    """The persistent record log or manifest could not be read or written."""


@dataclass(frozen=True)
class RetrievalHit:
    record_id: str
    similarity: float
    payload: str


@dataclass(frozen=True)
class StoredRecord:
    record_id: str
    payload: str
    vector: tuple
    content_hash: Optional[str] = None
    created_at: Optional[float] = None


class VectorStore:
    """One collection of embedded records; optionally disk-backed."""

    def __init__(
        self,
        dimension: int,
        provider_id: str,
        path: Optional[Union[str, Path]] = None,
        backend: str = "exact",
    ):
        if backend not in ("exact", "hnsw"):
            raise ValueError(f"unknown search backend: {backend!r}")
        self.dimension = dimension
        self.provider_id = provider_id
        self.backend = backend
        self._path = Path(path) if path is not None else None
        self._lock = threading.RLock()
        self._records: Dict[str, StoredRecord] = {}
        self._order: List[str] = []  # insertion order of live record ids
        self._matrix: Optional[np.ndarray] = None
        self._hnsw: Optional[HnswIndex] = HnswIndex(dimension) if backend == "hnsw" else None
        self._hnsw_nodes: Dict[str, int] = {}
        if self._path is not None:
            self._path.mkdir(parents=True, exist_ok=True)
            if (self._path / RECORDS_NAME).exists():
                self._replay_log()
            self._write_manifest()

    @classmethod
    def open(cls, path: Union[str, Path], backend: str = "exact") -> "VectorStore":
        path = Path(path)
        manifest_file = path / MANIFEST_NAME
        try:
            manifest = json.loads(manifest_file.read_text(encoding="utf-8"))
            dimension = int(manifest["dimension"])
            provider_id = str(manifest["provider"])
        except (OSError, ValueError, KeyError) as exc:
            raise StoreError(f"unreadable store manifest at {manifest_file}: {exc}") from exc
        return cls(dimension=dimension, provider_id=provider_id, path=path, backend=backend)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def ids(self) -> List[str]:
        with self._lock:
            return list(self._order)

    def get(self, record_id: str) -> Optional[StoredRecord]:
        with self._lock:
            return self._records.get(record_id)

    def add(
        self,
        record_id: str,
        vector: Union[EmbeddingVector, Sequence[float]],
        payload: str,
        content_hash: Optional[str] = None,
        created_at: Optional[float] = None,
    ) -> None:
        values = vector.as_array() if isinstance(vector, EmbeddingVector) else np.asarray(vector, dtype=np.float64)
        if values.shape != (self.dimension,):
            raise DimensionError(
                f"record dimension {values.shape} does not match store dimension {self.dimension}"
            )
        norm = float(np.linalg.norm(values))
        if norm == 0.0:
            raise DimensionError("cannot index a zero vector")
        values = values / norm
        record = StoredRecord(
            record_id=record_id,
            payload=payload,
            vector=tuple(values.tolist()),
            content_hash=content_hash,
            created_at=created_at,
        )
        with self._lock:
            replacing = record_id in self._records
            self._records[record_id] = record
            if replacing:
                self._order.remove(record_id)
                if self._hnsw is not None and record_id in self._hnsw_nodes:
                    self._hnsw.mark_deleted(self._hnsw_nodes.pop(record_id))
            self._order.append(record_id)
            self._matrix = None
            if self._hnsw is not None:
                self._hnsw_nodes[record_id] = self._hnsw.add(values)
            self._append_log(
                {
                    "op": "add",
                    "id": record_id,
                    "payload": payload,
                    "vector": list(record.vector),
                    "hash": content_hash,
                    "created_at": created_at,
                }
            )
            self._write_manifest()

    def delete(self, record_id: str) -> bool:
        with self._lock:
            if record_id not in self._records:
                return False
            del self._records[record_id]
            self._order.remove(record_id)
            self._matrix = None
            if self._hnsw is not None and record_id in self._hnsw_nodes:
                self._hnsw.mark_deleted(self._hnsw_nodes.pop(record_id))
            self._append_log({"op": "del", "id": record_id})
            self._write_manifest()
            return True

    def top_k(self, query: Union[EmbeddingVector, Sequence[float]], k: int) -> List[RetrievalHit]:
        """Best-first hits; exact backend returns the true top-k."""
        if k < 0:
            raise ValueError("k must be >= 0")
        values = query.as_array() if isinstance(query, EmbeddingVector) else np.asarray(query, dtype=np.float64)
        if values.shape != (self.dimension,):
            raise DimensionError(
                f"query dimension {values.shape} does not match store dimension {self.dimension}"
            )
        norm = float(np.linalg.norm(values))
        if norm == 0.0:
            raise DimensionError("cannot search with a zero vector")
        values = values / norm
        with self._lock:
            if k == 0 or not self._records:
                return []
            if self._hnsw is not None:
                pairs = self._hnsw.search(values, k)
                node_to_id = {node: rid for rid, node in self._hnsw_nodes.items()}
                hits = []
                for node, sim in pairs:
                    rid = node_to_id.get(node)
                    if rid is None:
                        continue
                    hits.append(RetrievalHit(rid, sim, self._records[rid].payload))
                return hits
            if self._matrix is None:
                self._matrix = np.stack([self._records[r].vector for r in self._order])
            sims = self._matrix @ values
            # Sort by similarity descending, ties broken by record id for
            # reproducible runs.
            ranked = sorted(
                range(len(self._order)), key=lambda i: (-sims[i], self._order[i])
            )[:k]
            return [
                RetrievalHit(self._order[i], float(sims[i]), self._records[self._order[i]].payload)
                for i in ranked
            ]

    def _append_log(self, entry: dict) -> None:
        if self._path is None:
            return
        try:
            with (self._path / RECORDS_NAME).open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
        except OSError as exc:
            raise StoreError(f"failed to append to record log: {exc}") from exc

    def _write_manifest(self) -> None:
        if self._path is None:
            return
        manifest = {
            "schema": SCHEMA,
            "dimension": self.dimension,
            "provider": self.provider_id,
            "count": len(self._records),
        }
        try:
            (self._path / MANIFEST_NAME).write_text(
                json.dumps(manifest, sort_keys=True) + "\n", encoding="utf-8"
            )
        except OSError as exc:
            raise StoreError(f"failed to write manifest: {exc}") from exc

    def _replay_log(self) -> None:
        log_path = self._path / RECORDS_NAME
        try:
            lines = log_path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise StoreError(f"failed to read record log: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
            except ValueError as exc:
                raise StoreError(f"corrupt record log line {lineno}: {exc}") from exc
            if entry.get("op") == "del":
                rid = entry["id"]
                if rid in self._records:
                    del self._records[rid]
                    self._order.remove(rid)
                continue
            rid = entry["id"]
            if rid in self._records:
                self._order.remove(rid)
                if self._hnsw is not None and rid in self._hnsw_nodes:
                    self._hnsw.mark_deleted(self._hnsw_nodes.pop(rid))
            record = StoredRecord(
                record_id=rid,
                payload=entry["payload"],
                vector=tuple(entry["vector"]),
                content_hash=entry.get("hash"),
                created_at=entry.get("created_at"),
            )
            self._records[rid] = record
            self._order.append(rid)
            if self._hnsw is not None:
                self._hnsw_nodes[rid] = self._hnsw.add(np.asarray(record.vector))
        self._matrix = None
