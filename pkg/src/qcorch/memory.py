"""Long-term and shared memory: session-global append-only log, semantic
entries, a disabled-by-default episodic store, and filesystem grounding.

Persistence is file-backed under the session directory: the global memory is
one structured record per line ``{seq, author, ts, text}`` so another process
(or a restart) can reload it.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

GLOBAL_MEMORY_FILENAME = "global_memory.jsonl"


@dataclass
class GlobalMemoryEntry:
    seq: int
    author: str
    timestamp: float
    text: str

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "author": self.author, "ts": self.timestamp, "text": self.text}
        )

    @classmethod
    def from_json(cls, line: str) -> "GlobalMemoryEntry":
        d = json.loads(line)
        return cls(seq=d["seq"], author=d["author"], timestamp=d["ts"], text=d["text"])


class GlobalMemory:
    """Append-only session-shared log, durable on every append."""

    def __init__(self, session_dir: Path):
        self.path = Path(session_dir) / GLOBAL_MEMORY_FILENAME
        self._lock = threading.Lock()
        self._entries: list[GlobalMemoryEntry] = []
        if self.path.exists():
            self._entries = [
                GlobalMemoryEntry.from_json(line)
                for line in self.path.read_text().splitlines()
                if line.strip()
            ]

    def append(self, author: str, text: str) -> GlobalMemoryEntry:
        with self._lock:
            entry = GlobalMemoryEntry(
                seq=len(self._entries) + 1, author=author, timestamp=time.time(), text=text
            )
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as f:
                f.write(entry.to_json() + "\n")
                f.flush()
                os.fsync(f.fileno())
            self._entries.append(entry)
            return entry

    def read(self) -> list[GlobalMemoryEntry]:
        with self._lock:
            return list(self._entries)

    def tail(self, last_k: int = 50) -> list[GlobalMemoryEntry]:
        with self._lock:
            return self._entries[-last_k:]


@dataclass
class SemanticMemoryEntry:
    tags: frozenset[str]
    owner: str  # agent id or "shared"
    text: str


class SemanticMemory:
    """Tag-indexed role knowledge; retrieval is deterministic (seed order)."""

    def __init__(self):
        self._entries: list[SemanticMemoryEntry] = []

    def add(self, tags: Sequence[str], text: str, owner: str = "shared"):
        self._entries.append(SemanticMemoryEntry(frozenset(tags), owner, text))

    def retrieve(self, agent_id: str, tags: Sequence[str]) -> list[SemanticMemoryEntry]:
        wanted = set(tags)
        if not wanted:
            return []
        return [
            e
            for e in self._entries
            if e.owner in (agent_id, "shared") and e.tags & wanted
        ]


@dataclass
class EpisodicRecord:
    agent: str
    session: str
    decision: dict
    outcome: str


class EpisodicStore:
    """Present but disabled by default: writes while disabled are accepted
    no-ops, mirroring the deployed configuration."""

    def __init__(self, enabled: bool = False):
        self.enabled = enabled
        self._records: list[EpisodicRecord] = []

    def write(self, record: EpisodicRecord) -> bool:
        if self.enabled:
            self._records.append(record)
        return True

    def records(self) -> list[EpisodicRecord]:
        return list(self._records)


@dataclass
class GroundingEntry:
    path: str  # relative, forward slashes
    kind: str  # file | dir | unreadable
    size: int


@dataclass
class GroundingSnapshot:
    root: str
    entries: list[GroundingEntry] = field(default_factory=list)
    depth_limit: int = 4
    available: bool = True
    truncated: bool = False

    def render(self) -> str:
        if not self.available:
            return "(working directory unavailable)"
        lines = [f"{e.path} [{e.kind}] {e.size}" for e in self.entries]
        if self.truncated:
            lines.append("(...listing truncated)")
        return "\n".join(lines) if lines else "(empty)"

    def paths(self) -> list[str]:
        return [e.path for e in self.entries]


def snapshot_grounding(
    root, depth_limit: int = 4, max_entries: int = 500
) -> GroundingSnapshot:
    """Deterministic sorted listing of the working directory.

    Unreadable subdirectories are flagged and traversal continues; entries
    beyond ``depth_limit`` path components or past ``max_entries`` are cut.
    """
    root = Path(root)
    snap = GroundingSnapshot(root=str(root), depth_limit=depth_limit)
    if not root.is_dir() or not os.access(root, os.R_OK):
        snap.available = False
        return snap

    entries: list[GroundingEntry] = []

    def walk(d: Path, depth: int):
        try:
            children = sorted(d.iterdir(), key=lambda p: p.name)
        except PermissionError:
            rel = d.relative_to(root).as_posix()
            entries.append(GroundingEntry(rel, "unreadable", 0))
            return
        for child in children:
            rel = child.relative_to(root).as_posix()
            if child.is_dir() and not child.is_symlink():
                entries.append(GroundingEntry(rel, "dir", 0))
                if depth + 1 < depth_limit:
                    walk(child, depth + 1)
                continue
            try:
                size = child.stat().st_size
            except OSError:
                entries.append(GroundingEntry(rel, "unreadable", 0))
                continue
            entries.append(GroundingEntry(rel, "file", size))

    walk(root, 0)
    entries.sort(key=lambda e: e.path)
    if len(entries) > max_entries:
        entries = entries[:max_entries]
        snap.truncated = True
    snap.entries = entries
    return snap
