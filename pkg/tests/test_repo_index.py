from __future__ import annotations

import time

import pytest

from patchwright.core import PathError
from patchwright.retrieval import (
    HashingEmbeddingProvider,
    RepositoryIndex,
    RepoWatcher,
    VectorStore,
)

SETTLE_MS = 250


@pytest.fixture
def provider():
    return HashingEmbeddingProvider(dimension=64)


@pytest.fixture
def index(provider):
    store = VectorStore(dimension=64, provider_id=provider.provider_id)
    return RepositoryIndex(store, provider)


def fresh_rebuild(root, provider):
    store = VectorStore(dimension=64, provider_id=provider.provider_id)
    ridx = RepositoryIndex(store, provider)
    ridx.index_repository(root)
    return {rid: store.get(rid).content_hash for rid in store.ids()}


def index_state(index):
    return {rid: index.store.get(rid).content_hash for rid in index.store.ids()}


class TestIndexRepository:
    def test_empty_directory(self, tmp_path, index):
        summary = index.index_repository(tmp_path)
        assert summary.indexed == 0
        assert len(index.store) == 0

    def test_three_source_files(self, tmp_path, index):
        for name in ("a.py", "b.py", "c.md"):
            (tmp_path / name).write_text(f"content of {name}\n")
        summary = index.index_repository(tmp_path)
        assert summary.indexed == 3
        assert sorted(index.store.ids()) == ["a.py", "b.py", "c.md"]

    def test_non_source_and_binary_files_skipped(self, tmp_path, index):
        (tmp_path / "keep.py").write_text("x = 1\n")
        (tmp_path / "image.bin").write_bytes(b"\x00\x01\x02")
        (tmp_path / "note.xyz").write_text("not a source extension")
        (tmp_path / "tricky.py").write_bytes(b"data \x00 inside")
        summary = index.index_repository(tmp_path)
        assert summary.indexed == 1
        assert ("tricky.py", "binary") in summary.skipped

    def test_unchanged_files_not_reembedded(self, tmp_path, index):
        (tmp_path / "a.py").write_text("alpha\n")
        (tmp_path / "b.py").write_text("beta\n")
        index.index_repository(tmp_path)
        (tmp_path / "a.py").write_text("alpha changed\n")
        summary = index.index_repository(tmp_path)
        assert summary.indexed == 1
        assert summary.unchanged == 1

    def test_incremental_equals_rebuild(self, tmp_path, index, provider):
        (tmp_path / "a.py").write_text("one\n")
        (tmp_path / "b.py").write_text("two\n")
        index.index_repository(tmp_path)
        (tmp_path / "b.py").write_text("two modified\n")
        (tmp_path / "c.py").write_text("three\n")
        (tmp_path / "a.py").unlink()
        index.index_repository(tmp_path)
        assert index_state(index) == fresh_rebuild(tmp_path, provider)

    def test_missing_root(self, tmp_path, index):
        with pytest.raises(PathError):
            index.index_repository(tmp_path / "nope")

    def test_subdirectories_and_excludes(self, tmp_path, index):
        (tmp_path / "pkg").mkdir()
        (tmp_path / "pkg" / "mod.py").write_text("x\n")
        (tmp_path / "__pycache__").mkdir()
        (tmp_path / "__pycache__" / "mod.py").write_text("cache\n")
        index.index_repository(tmp_path)
        assert index.store.ids() == ["pkg/mod.py"]


def wait_until(predicate, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.05)
    return predicate()


class TestWatcher:
    @pytest.mark.parametrize("force_polling", [False, True])
    def test_create_and_delete_reflected(self, tmp_path, index, force_polling):
        index.index_repository(tmp_path)
        watcher = RepoWatcher(
            tmp_path, index, settle_ms=SETTLE_MS, poll_ms=100, force_polling=force_polling
        ).start()
        try:
            (tmp_path / "fresh.py").write_text("created\n")
            assert wait_until(lambda: "fresh.py" in index.store.ids())
            (tmp_path / "fresh.py").unlink()
            assert wait_until(lambda: "fresh.py" not in index.store.ids())
        finally:
            watcher.stop()

    def test_burst_of_writes_settles_to_rebuild_state(self, tmp_path, index, provider):
        (tmp_path / "hot.py").write_text("v0\n")
        index.index_repository(tmp_path)
        watcher = RepoWatcher(tmp_path, index, settle_ms=SETTLE_MS, poll_ms=100).start()
        try:
            for i in range(100):
                (tmp_path / "hot.py").write_text(f"version {i}\n")
            assert wait_until(
                lambda: index_state(index) == fresh_rebuild(tmp_path, provider)
            )
        finally:
            watcher.stop()

    def test_stop_is_clean(self, tmp_path, index):
        watcher = RepoWatcher(tmp_path, index, settle_ms=SETTLE_MS).start()
        watcher.stop()
        assert not watcher._worker.is_alive()
