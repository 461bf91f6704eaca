"""Append-only persistence: JSONL record logs and a content-addressed image store."""

from __future__ import annotations

import hashlib
import json
import threading
import uuid
from pathlib import Path


class AppendLog:
    """One JSON record per line, append-only.

    Appends are serialized by a lock and flushed before it releases, so a
    reader that follows any append sees every record up to and including it.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with self._lock:
            with open(self.path, "a") as fh:
                fh.write(line + "\n")

    def records(self) -> list[dict]:
        if not self.path.exists():
            return []
        with self._lock:
            text = self.path.read_text()
        return [json.loads(line) for line in text.splitlines() if line.strip()]


_MAGIC_SUFFIX = ((b"\x89PNG\r\n\x1a\n", ".png"), (b"\xff\xd8\xff", ".jpg"))


class ImageStore:
    """Files named by the sha256 of their content.

    Resubmitting identical bytes deduplicates storage; distinct request
    records may point at one stored file.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes) -> str:
        """Store the payload and return its file name (digest + suffix)."""
        digest = hashlib.sha256(data).hexdigest()
        suffix = ".bin"
        for magic, ext in _MAGIC_SUFFIX:
            if data.startswith(magic):
                suffix = ext
                break
        name = digest + suffix
        target = self.root / name
        if not target.exists():
            # unique temp name: concurrent writers of one digest must not share it
            tmp = target.with_suffix(f".{uuid.uuid4().hex}.tmp")
            tmp.write_bytes(data)
            tmp.replace(target)
        return name

    def path(self, name: str) -> Path:
        return self.root / name
