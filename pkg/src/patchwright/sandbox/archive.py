"""In-memory tar construction for injecting payloads into containers.

Nothing is ever staged on the host filesystem; the archive exists only as
bytes on their way to the container runtime.
"""

from __future__ import annotations

import io
import tarfile
import time
from typing import Iterable, Tuple

from ..core.errors import PathError
from ..core.types import validate_relative_path


def build_archive(files: Iterable[Tuple[str, str]]) -> bytes:
    """Pack (path, content) pairs into a tar archive held fully in memory."""
    buffer = io.BytesIO()
    seen = set()
    with tarfile.open(fileobj=buffer, mode="w") as tar:
        for path, content in files:
            validate_relative_path(path)
            if path in seen:
                raise PathError(f"duplicate archive path: {path!r}")
            seen.add(path)
            data = content.encode("utf-8")
            info = tarfile.TarInfo(name=path)
            info.size = len(data)
            info.mtime = int(time.time())
            info.mode = 0o644
            tar.addfile(info, io.BytesIO(data))
    return buffer.getvalue()


def extract_archive(archive: bytes) -> dict:
    """Inverse of build_archive, used by tests and the fake runtime."""
    out = {}
    with tarfile.open(fileobj=io.BytesIO(archive), mode="r") as tar:
        for member in tar.getmembers():
            if member.isfile():
                out[member.name] = tar.extractfile(member).read().decode("utf-8")
    return out
