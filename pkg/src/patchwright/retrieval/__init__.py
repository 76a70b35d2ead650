"""Dual retrieval: episodic memory of solved tasks and a live repository index,
both backed by one vector store with cosine top-k search.
"""

from .embedding import (
    DEFAULT_DIMENSION,
    EmbeddingProvider,
    EmbeddingVector,
    HashingEmbeddingProvider,
    ProviderError,
    RemoteEmbeddingProvider,
    build_provider,
    normalize,
)
from .hnsw import HnswIndex
from .memory import EpisodicMemory
from .repo_index import (
    DEFAULT_EXTENSIONS,
    IndexSummary,
    RepositoryIndex,
    RepoWatcher,
)
from .store import DimensionError, RetrievalHit, StoreError, StoredRecord, VectorStore

__all__ = [
    "DEFAULT_DIMENSION",
    "DEFAULT_EXTENSIONS",
    "DimensionError",
    "EmbeddingProvider",
    "EmbeddingVector",
    "EpisodicMemory",
    "HashingEmbeddingProvider",
    "HnswIndex",
    "IndexSummary",
    "ProviderError",
    "RemoteEmbeddingProvider",
    "RepositoryIndex",
    "RepoWatcher",
    "RetrievalHit",
    "StoreError",
    "StoredRecord",
    "VectorStore",
    "build_provider",
    "normalize",
]
