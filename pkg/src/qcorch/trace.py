"""Append-only action trace: recording, counters, notebook and log export."""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional


class EventKind(str, Enum):
    COMMANDING = "commanding"
    REPORTING = "reporting"
    ACTING = "acting"
    USER = "user"
    SYSTEM = "system"


@dataclass
class ActionEvent:
    seq: int
    timestamp: float
    agent: str
    kind: EventKind
    title: str
    summary: str
    payload_ref: Optional[str] = None  # path to full payload on disk

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "ts": self.timestamp,
                "agent": self.agent,
                "kind": self.kind.value,
                "title": self.title,
                "summary": self.summary,
                "payload_ref": self.payload_ref,
            }
        )

    def canonical_line(self) -> str:
        """Log line with the timestamp removed, for determinism comparisons."""
        return json.dumps(
            {
                "seq": self.seq,
                "agent": self.agent,
                "kind": self.kind.value,
                "title": self.title,
                "summary": self.summary,
                "payload_ref": self.payload_ref,
            },
            sort_keys=True,
        )


class StorageError(RuntimeError):
    """Trace persistence failed; the owning session should degrade."""


class Trace:
    """Durable, strictly-ordered event log for one session.

    Appends from the decision loop and exec callbacks are serialized by the
    seq-assignment lock. Full payloads go to ``payloads/evt_<seq>.txt`` next
    to the log; events carry only summaries.
    """

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.log_path = self.directory / "trace.jsonl"
        self.payload_dir = self.directory / "payloads"
        self._lock = threading.Lock()
        self._events: list[ActionEvent] = []

    @classmethod
    def load(cls, directory: Path) -> "Trace":
        """Reload a persisted trace for export."""
        trace = cls(directory)
        if trace.log_path.exists():
            for line in trace.log_path.read_text().splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                trace._events.append(
                    ActionEvent(
                        seq=record["seq"],
                        timestamp=record["ts"],
                        agent=record["agent"],
                        kind=EventKind(record["kind"]),
                        title=record["title"],
                        summary=record["summary"],
                        payload_ref=record.get("payload_ref"),
                    )
                )
        return trace

    def record(
        self,
        agent: str,
        kind: EventKind,
        title: str,
        summary: str,
        payload: Optional[str] = None,
    ) -> ActionEvent:
        with self._lock:
            seq = len(self._events) + 1
            payload_ref = None
            try:
                self.directory.mkdir(parents=True, exist_ok=True)
                if payload is not None:
                    self.payload_dir.mkdir(parents=True, exist_ok=True)
                    rel = f"payloads/evt_{seq:06d}.txt"
                    (self.directory / rel).write_text(payload)
                    payload_ref = rel
                event = ActionEvent(
                    seq=seq,
                    timestamp=time.time(),
                    agent=agent,
                    kind=kind,
                    title=title,
                    summary=summary,
                    payload_ref=payload_ref,
                )
                with open(self.log_path, "a") as f:
                    f.write(event.to_json() + "\n")
                    f.flush()
                    os.fsync(f.fileno())
            except OSError as e:
                raise StorageError(f"trace append failed: {e}") from e
            self._events.append(event)
            return event

    def events(self, after: int = 0) -> list[ActionEvent]:
        with self._lock:
            return [e for e in self._events if e.seq > after]

    def counters(self) -> dict[str, int]:
        with self._lock:
            counts = {"commanding": 0, "reporting": 0, "acting": 0}
            for e in self._events:
                if e.kind.value in counts:
                    counts[e.kind.value] += 1
            return counts

    def canonical_lines(self) -> list[str]:
        with self._lock:
            return [e.canonical_line() for e in self._events]

    def payload_text(self, event: ActionEvent) -> Optional[str]:
        if event.payload_ref is None:
            return None
        return (self.directory / event.payload_ref).read_text()


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def _markdown_cell(source: str) -> dict:
    return {"cell_type": "markdown", "metadata": {}, "source": source}


def _code_cell(source: str) -> dict:
    return {
        "cell_type": "code",
        "execution_count": None,
        "metadata": {},
        "outputs": [],
        "source": source,
    }


def _call_expression(title: str, payload: Optional[str]) -> str:
    """Replayable language-neutral call for an acting event.

    Acting payloads written by the session loop start with a
    ``call: tool(name=value, ...)`` line; fall back to the title.
    """
    if payload:
        first = payload.splitlines()[0]
        if first.startswith("call: "):
            return first[len("call: "):]
    return title


def export_notebook(trace: Trace) -> dict:
    """Render the trace as a notebook-format v4 document.

    One markdown cell per commanding/reporting/user/system event; one code
    cell per acting event carrying the replayable ``tool(arg=value, ...)``
    expression. Tool-binding notes live in the notebook metadata.
    """
    events = trace.events()
    if not events:
        raise ValueError("session has no events to export")
    cells = []
    for e in events:
        if e.kind is EventKind.ACTING:
            source = _call_expression(e.title, trace.payload_text(e))
            if e.summary:
                source += "\n# -> " + e.summary.splitlines()[0]
            cells.append(_code_cell(source))
        else:
            cells.append(_markdown_cell(f"**{e.kind.value}** `{e.agent}`: {e.summary or e.title}"))
    return {
        "nbformat": 4,
        "nbformat_minor": 5,
        "metadata": {
            "language_info": {"name": "python"},
            "qcorch": {
                "bindings": (
                    "Each code cell is a language-neutral tool call "
                    "`tool_name(arg=value, ...)`; bind tool names to host "
                    "functions with the same signatures to replay the trace."
                ),
            },
        },
        "cells": cells,
    }


def export_log(trace: Trace) -> str:
    """Plain log export: the same line format as the global memory file."""
    lines = [
        json.dumps(
            {"seq": e.seq, "author": e.agent, "ts": e.timestamp, "text": f"[{e.kind.value}] {e.title}: {e.summary}"}
        )
        for e in trace.events()
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def notebook_schema() -> dict:
    text = resources.files("qcorch").joinpath("schemas/nbformat.v4.schema.json").read_text()
    return json.loads(text)


def validate_notebook(document: dict) -> None:
    """Validate against the bundled notebook v4 schema; raises on failure."""
    import jsonschema

    jsonschema.validate(document, notebook_schema())
