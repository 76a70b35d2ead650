"""Episodic memory: a persistent store of previously solved (task, code) pairs.

Append-only by design; retrieval naturally prefers the most similar episode,
so duplicates are kept rather than deduplicated.
"""

from __future__ import annotations

import hashlib
import json
import time
from typing import List, Optional

from ..core.types import Task
from .embedding import EmbeddingProvider
from .store import RetrievalHit, VectorStore


class EpisodicMemory:
    def __init__(self, store: VectorStore, provider: EmbeddingProvider):
        if store.dimension != provider.dimension:
            raise ValueError(
                f"store dimension {store.dimension} != provider dimension {provider.dimension}"
            )
        self.store = store
        self.provider = provider

    def __len__(self) -> int:
        return len(self.store)

    def store_episode(self, task: Task, code: str) -> str:
        """Persist one solved episode; returns the new record id."""
        digest = hashlib.blake2b(
            (task.description + "\x00" + code).encode("utf-8"), digest_size=6
        ).hexdigest()
        record_id = f"ep-{len(self.store):06d}-{digest}"
        payload = json.dumps({"task": task.description, "code": code}, sort_keys=True)
        vector = self.provider.embed(task.description)
        self.store.add(
            record_id,
            vector,
            payload,
            created_at=time.time(),
        )
        return record_id

    def query(self, text: str, k: int) -> List[RetrievalHit]:
        if k <= 0 or len(self.store) == 0:
            return []
        return self.store.top_k(self.provider.embed(text), k)

    @staticmethod
    def decode_payload(hit: RetrievalHit) -> dict:
        return json.loads(hit.payload)
