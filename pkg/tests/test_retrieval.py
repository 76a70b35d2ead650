from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patchwright.core import Task
from patchwright.retrieval import (
    DimensionError,
    EpisodicMemory,
    HashingEmbeddingProvider,
    HnswIndex,
    StoreError,
    VectorStore,
)


@pytest.fixture
def provider():
    return HashingEmbeddingProvider(dimension=256)


class TestHashingProvider:
    def test_deterministic(self, provider):
        a = provider.embed("fix the divide by zero bug")
        b = provider.embed("fix the divide by zero bug")
        assert a.values == b.values

    def test_unit_norm(self, provider):
        for text in ("x", "hello world", "a much longer piece of text " * 20):
            vec = provider.embed(text)
            assert math.isclose(float(np.linalg.norm(vec.as_array())), 1.0, abs_tol=1e-9)

    def test_dimension(self, provider):
        assert provider.embed("anything").dimension == 256

    def test_empty_text_rejected(self, provider):
        with pytest.raises(ValueError):
            provider.embed("")

    def test_no_collisions_over_word_corpus(self, provider):
        # 1000 distinct words must map to 1000 distinct vectors.
        seen = set()
        for i in range(1000):
            vec = provider.embed(f"word-number-{i}")
            seen.add(vec.values)
        assert len(seen) == 1000


def brute_force_top_k(ids, matrix, query, k):
    sims = matrix @ query
    ranked = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))[:k]
    return [(ids[i], sims[i]) for i in ranked]


def random_store(rng, n, dim, backend="exact", path=None):
    store = VectorStore(dimension=dim, provider_id="test", path=path, backend=backend)
    vectors = rng.normal(size=(n, dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    for i in range(n):
        store.add(f"rec-{i:04d}", vectors[i], payload=f"payload {i}")
    return store, vectors


class TestVectorStore:
    def test_exact_match_is_first_hit(self, provider):
        store = VectorStore(dimension=256, provider_id=provider.provider_id)
        target = provider.embed("the exact query text")
        store.add("hit", target, "payload")
        store.add("other", provider.embed("something unrelated entirely"), "noise")
        hits = store.top_k(target, 2)
        assert hits[0].record_id == "hit"
        assert hits[0].similarity == pytest.approx(1.0)

    def test_k_zero_returns_empty(self, provider):
        store = VectorStore(dimension=256, provider_id="p")
        store.add("a", provider.embed("a text"), "x")
        assert store.top_k(provider.embed("a text"), 0) == []

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(3)
        store, vectors = random_store(rng, 500, 64)
        ids = store.ids()
        for _ in range(10):
            q = rng.normal(size=64)
            q /= np.linalg.norm(q)
            hits = store.top_k(q, 5)
            expected = brute_force_top_k(ids, vectors, q, 5)
            assert [h.record_id for h in hits] == [rid for rid, _ in expected]

    def test_hits_sorted_nonincreasing(self):
        rng = np.random.default_rng(4)
        store, _ = random_store(rng, 100, 32)
        q = rng.normal(size=32)
        hits = store.top_k(q / np.linalg.norm(q), 20)
        sims = [h.similarity for h in hits]
        assert sims == sorted(sims, reverse=True)

    def test_scale_invariance_of_ordering(self):
        # Multiplying stored vectors by a positive scalar before normalization
        # must not change the ordering.
        rng = np.random.default_rng(5)
        dim = 32
        vectors = rng.normal(size=(50, dim))
        s1 = VectorStore(dimension=dim, provider_id="p")
        s2 = VectorStore(dimension=dim, provider_id="p")
        for i, v in enumerate(vectors):
            s1.add(f"r{i}", v, "")
            s2.add(f"r{i}", v * 37.5, "")
        q = rng.normal(size=dim)
        assert [h.record_id for h in s1.top_k(q, 10)] == [
            h.record_id for h in s2.top_k(q, 10)
        ]

    def test_dimension_mismatch(self):
        store = VectorStore(dimension=8, provider_id="p")
        with pytest.raises(DimensionError):
            store.top_k(np.ones(4), 1)
        with pytest.raises(DimensionError):
            store.add("r", np.ones(16), "")

    def test_persistence_round_trip(self, tmp_path, provider):
        path = tmp_path / "collection"
        store = VectorStore(dimension=256, provider_id=provider.provider_id, path=path)
        vec = provider.embed("persist me")
        store.add("keep", vec, "the payload", content_hash="abc", created_at=123.0)
        store.add("drop", provider.embed("temporary"), "bye")
        store.delete("drop")

        reopened = VectorStore.open(path)
        assert len(reopened) == 1
        record = reopened.get("keep")
        assert record.payload == "the payload"
        assert record.content_hash == "abc"
        assert record.vector == store.get("keep").vector  # bit-exact round trip
        manifest = json.loads((path / "manifest.json").read_text())
        assert manifest["count"] == 1
        assert manifest["dimension"] == 256

    def test_open_missing_manifest_raises_store_error(self, tmp_path):
        with pytest.raises(StoreError):
            VectorStore.open(tmp_path / "nowhere")


class TestHnsw:
    def test_recall_at_5_against_exact(self):
        rng = np.random.default_rng(11)
        dim, n = 48, 600
        vectors = rng.normal(size=(n, dim))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        index = HnswIndex(dim, seed=1)
        for v in vectors:
            index.add(v)
        hits_total = 0
        for _ in range(40):
            q = rng.normal(size=dim)
            q /= np.linalg.norm(q)
            approx = {node for node, _ in index.search(q, 5)}
            exact = set(np.argsort(-(vectors @ q))[:5].tolist())
            hits_total += len(approx & exact)
        assert hits_total / (40 * 5) >= 0.95

    def test_store_hnsw_backend_returns_same_shape(self):
        rng = np.random.default_rng(12)
        store, _ = random_store(rng, 200, 32, backend="hnsw")
        q = rng.normal(size=32)
        hits = store.top_k(q / np.linalg.norm(q), 5)
        assert len(hits) == 5
        sims = [h.similarity for h in hits]
        assert sims == sorted(sims, reverse=True)

    def test_deleted_records_not_returned(self):
        rng = np.random.default_rng(13)
        store, vectors = random_store(rng, 50, 16, backend="hnsw")
        store.delete("rec-0007")
        q = vectors[7]
        hits = store.top_k(q, 10)
        assert "rec-0007" not in [h.record_id for h in hits]


class TestEpisodicMemory:
    def test_store_and_retrieve(self, tmp_path, provider):
        store = VectorStore(dimension=256, provider_id=provider.provider_id, path=tmp_path / "mem")
        memory = EpisodicMemory(store, provider)
        task = Task(id="t1", description="add retry logic to the fetcher")
        rid = memory.store_episode(task, "def fetch(): ...")
        assert len(memory) == 1
        hits = memory.query("add retry logic to the fetcher", 3)
        assert hits[0].record_id == rid
        assert EpisodicMemory.decode_payload(hits[0])["code"] == "def fetch(): ..."

    def test_duplicates_are_kept(self, provider):
        store = VectorStore(dimension=256, provider_id=provider.provider_id)
        memory = EpisodicMemory(store, provider)
        task = Task(id="t", description="same task twice")
        first = memory.store_episode(task, "code")
        second = memory.store_episode(task, "code")
        assert first != second
        assert len(memory) == 2

    def test_survives_reopen(self, tmp_path, provider):
        path = tmp_path / "mem"
        store = VectorStore(dimension=256, provider_id=provider.provider_id, path=path)
        memory = EpisodicMemory(store, provider)
        memory.store_episode(Task(id="t", description="persist across restart"), "x = 1")

        reopened = EpisodicMemory(VectorStore.open(path), provider)
        hits = reopened.query("persist across restart", 1)
        assert len(hits) == 1
        assert hits[0].similarity == pytest.approx(1.0)


class TestTopKProperty:
    @given(
        n=st.integers(1, 60),
        dim=st.sampled_from([4, 8, 16]),
        k=st.integers(0, 10),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=60, deadline=None)
    def test_exact_top_k_equals_exhaustive_scan(self, n, dim, k, seed):
        rng = np.random.default_rng(seed)
        vectors = rng.normal(size=(n, dim))
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        vectors = vectors / np.where(norms == 0, 1.0, norms)
        store = VectorStore(dimension=dim, provider_id="prop")
        ids = []
        for i, v in enumerate(vectors):
            if np.linalg.norm(v) == 0:
                continue
            rid = f"r{i:03d}"
            store.add(rid, v, payload="")
            ids.append(rid)
        if not ids:
            return
        q = rng.normal(size=dim)
        if np.linalg.norm(q) == 0:
            return
        q = q / np.linalg.norm(q)
        kept = np.stack([store.get(rid).vector for rid in ids])
        sims = kept @ q
        expected = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))[:k]
        hits = store.top_k(q, k)
        assert [h.record_id for h in hits] == [ids[i] for i in expected]
