"""Line-delimited JSON persistence primitives.

Every durable store in the platform is an append-only ``.jsonl`` file plus
an in-memory index rebuilt on startup. Appends are single ``write`` calls
of one newline-terminated line, which keeps concurrent readers safe.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Iterator


def read_jsonl(path: Path | str) -> Iterator[dict]:
    path = Path(path)
    if not path.exists():
        return
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path: Path | str, docs: Iterable[dict]) -> int:
    """Write all docs, replacing any existing file. Returns count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc, ensure_ascii=False) + "\n")
            n += 1
    return n


def append_jsonl(path: Path | str, doc: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    line = json.dumps(doc, ensure_ascii=False) + "\n"
    with path.open("a", encoding="utf-8") as fh:
        fh.write(line)


class JsonlAppender:
    """Persistent append handle for hot logs; one write call per line."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self._fh = None

    def append(self, doc: dict) -> None:
        if self._fh is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("a", encoding="utf-8")
        self._fh.write(json.dumps(doc, ensure_ascii=False) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class TailReader:
    """Incremental reader for a jsonl file another process may append to."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self._offset = 0

    def poll(self) -> list[dict]:
        """Return docs appended since the last poll."""
        if not self.path.exists():
            return []
        size = self.path.stat().st_size
        if size <= self._offset:
            return []
        with self.path.open("r", encoding="utf-8") as fh:
            fh.seek(self._offset)
            chunk = fh.read(size - self._offset)
        # Only consume complete lines; a concurrent writer may be mid-line.
        last_nl = chunk.rfind("\n")
        if last_nl < 0:
            return []
        self._offset += last_nl + 1
        docs = []
        for line in chunk[: last_nl + 1].splitlines():
            line = line.strip()
            if line:
                docs.append(json.loads(line))
        return docs


def ensure_dir(path: Path | str) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def is_writable_dir(path: Path | str) -> bool:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError:
        return False
    return os.access(path, os.W_OK)
