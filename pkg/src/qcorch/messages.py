"""Message and Decision types plus the one-line decision grammar shared by
the scripted rules file and the live endpoint wire format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional


class MessageKind(str, Enum):
    USER = "user"
    COMMAND = "command"
    REPORT = "report"
    TOOL_CALL = "tool_call"
    TOOL_RESULT = "tool_result"
    ERROR = "error"


@dataclass
class Message:
    id: str
    session_id: str
    kind: MessageKind
    sender: str  # agent id or "user"
    recipient: str  # agent id or tool name
    body: str
    summary: Optional[str] = None
    timestamp: float = 0.0
    exchange_id: Optional[str] = None
    # agent that originally produced the content (for tool results routed
    # through the hierarchy this is the invoking agent)
    origin: Optional[str] = None

    def render(self) -> str:
        head = f"[{self.kind.value}] {self.sender} -> {self.recipient}"
        if self.exchange_id:
            head += f" ({self.exchange_id})"
        text = f"{head}\n{self.body}"
        if self.summary and self.summary != self.body:
            text += f"\n[summary] {self.summary}"
        return text


class ActionKind(str, Enum):
    INVOKE_TOOL = "invoke_tool"
    DELEGATE = "delegate"
    RESPOND = "respond"
    FAIL = "fail"


@dataclass
class Decision:
    """One action chosen for a step. Targets must lie in the acting agent's
    callable modules; that invariant is enforced by the session loop."""

    action: ActionKind
    target: Optional[str] = None  # tool name or child agent id
    args: dict[str, Any] = field(default_factory=dict)
    body: str = ""

    @classmethod
    def invoke_tool(cls, name: str, args: Optional[dict] = None) -> "Decision":
        return cls(ActionKind.INVOKE_TOOL, target=name, args=dict(args or {}))

    @classmethod
    def delegate(cls, child: str, body: str) -> "Decision":
        return cls(ActionKind.DELEGATE, target=child, body=body)

    @classmethod
    def respond(cls, summary: str) -> "Decision":
        return cls(ActionKind.RESPOND, body=summary)

    @classmethod
    def fail(cls, reason: str) -> "Decision":
        return cls(ActionKind.FAIL, body=reason)

    def render(self) -> str:
        """Inverse of parse_decision_line."""
        if self.action is ActionKind.INVOKE_TOOL:
            return f"invoke {self.target} {json.dumps(self.args, sort_keys=True)}"
        if self.action is ActionKind.DELEGATE:
            return f"delegate {self.target} :: {_escape(self.body)}"
        if self.action is ActionKind.RESPOND:
            return f"respond :: {_escape(self.body)}"
        return f"fail :: {_escape(self.body)}"


class DecisionParseError(ValueError):
    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n")


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(text[i])
        i += 1
    return "".join(out)


def parse_decision_line(line: str) -> Decision:
    """Parse the one-line decision grammar:

    - ``invoke <tool> <json-args>`` (args optional)
    - ``delegate <child> :: <body>``
    - ``respond :: <summary>``
    - ``fail :: <reason>``

    Bodies use ``\\n`` escapes for newlines.
    """
    raw = line
    line = line.strip()
    if not line:
        raise DecisionParseError("empty decision line", raw)
    verb, _, rest = line.partition(" ")
    rest = rest.strip()
    if verb == "invoke":
        name, _, args_text = rest.partition(" ")
        if not name:
            raise DecisionParseError("invoke requires a tool name", raw)
        args: dict[str, Any] = {}
        if args_text.strip():
            try:
                args = json.loads(args_text)
            except json.JSONDecodeError as e:
                raise DecisionParseError(f"bad invoke args: {e}", raw) from None
            if not isinstance(args, dict):
                raise DecisionParseError("invoke args must be a JSON object", raw)
        return Decision.invoke_tool(name, args)
    if verb == "delegate":
        child, sep, body = rest.partition("::")
        child = child.strip()
        if not child or not sep:
            raise DecisionParseError("delegate requires '<child> :: <body>'", raw)
        return Decision.delegate(child, _unescape(body.strip()))
    if verb == "respond":
        _, sep, body = line.partition("::")
        if not sep:
            raise DecisionParseError("respond requires ':: <summary>'", raw)
        return Decision.respond(_unescape(body.strip()))
    if verb == "fail":
        _, sep, body = line.partition("::")
        if not sep:
            raise DecisionParseError("fail requires ':: <reason>'", raw)
        return Decision.fail(_unescape(body.strip()))
    raise DecisionParseError(f"unknown decision verb {verb!r}", raw)
