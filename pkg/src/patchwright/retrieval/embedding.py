"""Embedding providers behind one small interface.

The built-in provider is fully offline and deterministic: L2-normalized
feature hashing over character trigrams. The remote provider speaks an
embeddings HTTP endpoint and exists so production deployments can swap in a
hosted model without touching any caller.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Protocol, Sequence, Tuple

import httpx
import numpy as np

from ..core.errors import PatchwrightError

DEFAULT_DIMENSION = 256


class ProviderError(PatchwrightError):
    """The embedding provider could not produce a vector."""


@dataclass(frozen=True)
class EmbeddingVector:
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("embedding vector must be non-empty")

    @property
    def dimension(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def normalize(values: Sequence[float]) -> EmbeddingVector:
    arr = np.asarray(values, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ProviderError("cannot normalize a zero vector")
    return EmbeddingVector(tuple((arr / norm).tolist()))


class EmbeddingProvider(Protocol):
    provider_id: str
    dimension: int

    def embed(self, text: str) -> EmbeddingVector: ...


class HashingEmbeddingProvider:
    """Deterministic character-trigram feature hashing, L2-normalized.

    Uses blake2b (never Python's ``hash``) so output is stable across
    processes and interpreter versions.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION, ngram: int = 3):
        if dimension < 2:
            raise ValueError("dimension must be >= 2")
        self.dimension = dimension
        self.ngram = ngram
        self.provider_id = f"hashing-ngram{ngram}-d{dimension}"

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        padded = f"\x02{text}\x03"
        counts = np.zeros(self.dimension, dtype=np.float64)
        n = self.ngram
        if len(padded) < n:
            padded = padded.ljust(n, "\x03")
        for i in range(len(padded) - n + 1):
            digest = hashlib.blake2b(padded[i : i + n].encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            index = value % self.dimension
            sign = 1.0 if (value >> 62) & 1 else -1.0
            counts[index] += sign
        if not counts.any():
            # Signs cancelled exactly; fall back to a single deterministic bit.
            counts[int.from_bytes(hashlib.blake2b(text.encode(), digest_size=4).digest(), "big") % self.dimension] = 1.0
        return normalize(counts)


class RemoteEmbeddingProvider:
    """Client for an embeddings-API endpoint (OpenAI-compatible shape).

    The auth token comes from the environment, never from config files.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        dimension: int,
        api_key_env: str = "PATCHWRIGHT_EMBEDDING_API_KEY",
        timeout: float = 30.0,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.dimension = dimension
        self.api_key_env = api_key_env
        self.provider_id = f"remote-{model}-d{dimension}"
        self._client = client or httpx.Client(timeout=timeout)

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        headers = {}
        token = os.environ.get(self.api_key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            response = self._client.post(
                f"{self.base_url}/embeddings",
                json={"model": self.model, "input": [text]},
                headers=headers,
            )
            response.raise_for_status()
            values = response.json()["data"][0]["embedding"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        if len(values) != self.dimension:
            raise ProviderError(
                f"provider returned dimension {len(values)}, expected {self.dimension}"
            )
        return normalize(values)


def build_provider(name: str, dimension: int = DEFAULT_DIMENSION, **kwargs) -> EmbeddingProvider:
    if name == "deterministic":
        return HashingEmbeddingProvider(dimension=dimension)
    if name == "remote":
        return RemoteEmbeddingProvider(dimension=dimension, **kwargs)
    raise ValueError(f"unknown embedding provider: {name!r}")
