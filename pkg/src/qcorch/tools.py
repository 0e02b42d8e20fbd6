"""Tool abstraction: registry, per-agent action spaces, invocation, and
handler-produced result summaries."""

from __future__ import annotations

import threading
import traceback
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

SUMMARY_CAP = 2000
TRUNCATION_MARKER = " ...[truncated]"

_TYPES = {
    "str": str,
    "int": int,
    "float": (int, float),
    "bool": bool,
    "list": list,
    "dict": dict,
}


def cap_summary(text: str, cap: int = SUMMARY_CAP) -> str:
    """Enforce the summary length cap with an explicit truncation marker."""
    if len(text) <= cap:
        return text
    return text[: cap - len(TRUNCATION_MARKER)] + TRUNCATION_MARKER


@dataclass
class Parameter:
    name: str
    type: str  # str | int | float | bool | list | dict
    required: bool = True
    description: str = ""

    def __post_init__(self):
        if self.type not in _TYPES:
            raise ValueError(f"unknown parameter type {self.type!r}")


@dataclass
class ToolSpec:
    name: str
    description: str
    parameters: Sequence[Parameter] = ()
    handler: Optional[Callable[..., "ToolResult"]] = None
    reentrant: bool = True

    def validate_args(self, args: dict[str, Any]) -> list[str]:
        problems = []
        known = {p.name for p in self.parameters}
        for key in args:
            if key not in known:
                problems.append(f"unexpected argument {key!r}")
        for p in self.parameters:
            if p.name not in args:
                if p.required:
                    problems.append(f"missing required argument {p.name!r}")
                continue
            expected = _TYPES[p.type]
            value = args[p.name]
            if p.type == "float" and isinstance(value, bool):
                problems.append(f"argument {p.name!r} must be float, got bool")
            elif not isinstance(value, expected):
                problems.append(
                    f"argument {p.name!r} must be {p.type}, got {type(value).__name__}"
                )
        return problems

    def catalog_entry(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "parameters": [
                {
                    "name": p.name,
                    "type": p.type,
                    "required": p.required,
                    "description": p.description,
                }
                for p in self.parameters
            ],
        }


@dataclass
class ToolResult:
    ok: bool
    payload: Any = None
    summary: str = ""
    artifacts: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.ok and not self.summary:
            raise ValueError("successful tool results must carry a summary")
        self.summary = cap_summary(self.summary)

    def payload_text(self) -> str:
        if isinstance(self.payload, str):
            return self.payload
        import json

        try:
            return json.dumps(self.payload, indent=2, default=str)
        except TypeError:
            return repr(self.payload)


class ActionSpaceViolation(LookupError):
    """A tool or child outside the agent's callable modules was targeted."""


class DuplicateToolError(ValueError):
    pass


class ToolRegistry:
    def __init__(self):
        self._tools: dict[str, ToolSpec] = {}
        self._locks: dict[str, threading.Lock] = {}

    def register(self, spec: ToolSpec):
        if spec.name in self._tools:
            raise DuplicateToolError(f"tool {spec.name!r} already registered")
        self._tools[spec.name] = spec
        if not spec.reentrant:
            self._locks[spec.name] = threading.Lock()

    def get(self, name: str) -> ToolSpec:
        if name not in self._tools:
            raise KeyError(f"unknown tool {name!r}")
        return self._tools[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def names(self) -> list[str]:
        return sorted(self._tools)

    def resolve(self, agent, name: str) -> ToolSpec:
        """Look up a tool within an agent's action space."""
        if name not in agent.callable_modules:
            raise ActionSpaceViolation(
                f"tool {name!r} is outside the action space of agent {agent.id!r}"
            )
        return self.get(name)

    def catalog(self) -> list[dict]:
        """Structured dump of the whole tool catalog (name/description/schema)."""
        return [self._tools[name].catalog_entry() for name in sorted(self._tools)]

    def invoke(self, spec: ToolSpec, args: dict[str, Any]) -> ToolResult:
        """Validate args and run the handler; handler exceptions become
        ok=False results with the traceback as diagnostic payload."""
        problems = spec.validate_args(args)
        if problems:
            return ToolResult(
                ok=False,
                payload={"schema_errors": problems},
                summary=f"schema mismatch: {'; '.join(problems)}",
            )
        if spec.handler is None:
            return ToolResult(ok=False, payload=None, summary=f"tool {spec.name!r} has no handler")
        lock = self._locks.get(spec.name)
        try:
            if lock is not None:
                with lock:
                    result = spec.handler(**args)
            else:
                result = spec.handler(**args)
        except Exception as e:  # noqa: BLE001 - diagnostic boundary
            return ToolResult(
                ok=False,
                payload={"exception": repr(e), "traceback": traceback.format_exc()},
                summary=f"handler failure: {e!r}",
            )
        if not isinstance(result, ToolResult):
            result = ToolResult(ok=True, payload=result, summary=str(result))
        return result
