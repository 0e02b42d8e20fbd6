"""Pluggable reasoning core: a deterministic scripted policy for reproducible
runs, a remote model endpoint for live use, and token accounting."""

from __future__ import annotations

import json
import math
import os
import re
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

from qcorch.messages import Decision, DecisionParseError, parse_decision_line

ENDPOINT_ENV = "QCORCH_LLM_ENDPOINT"
CREDENTIAL_ENV = "QCORCH_LLM_KEY"


def count_tokens(text: str) -> int:
    """Deterministic token estimate: ceil(utf-8 byte length / 4)."""
    return math.ceil(len(text.encode("utf-8")) / 4)


@dataclass
class ReasoningRequest:
    agent_id: str
    rendered_context: str
    allowed_actions: Sequence[str] = ()


@dataclass
class UsageRecord:
    agent_id: str
    tokens_in: int
    tokens_out: int


class UsageLedger:
    """Per-agent and per-session cumulative usage; appends are serialized."""

    def __init__(self):
        self._lock = threading.Lock()
        self.records: list[UsageRecord] = []
        self.per_agent: dict[str, dict[str, int]] = {}

    def add(self, record: UsageRecord):
        with self._lock:
            self.records.append(record)
            agent = self.per_agent.setdefault(
                record.agent_id, {"tokens_in": 0, "tokens_out": 0}
            )
            agent["tokens_in"] += record.tokens_in
            agent["tokens_out"] += record.tokens_out

    @property
    def session_total(self) -> dict[str, int]:
        with self._lock:
            return {
                "tokens_in": sum(r.tokens_in for r in self.records),
                "tokens_out": sum(r.tokens_out for r in self.records),
            }


class ReasoningBackend(Protocol):
    def decide(self, request: ReasoningRequest) -> tuple[Decision, UsageRecord]: ...


@dataclass
class ScriptRule:
    agent: str  # agent id or "*"
    decision: Decision
    when: Optional[str] = None  # required context substring
    unless: Optional[str] = None  # forbidden context substring

    def matches(self, request: ReasoningRequest) -> bool:
        if self.agent not in ("*", request.agent_id):
            return False
        if self.when is not None and self.when not in request.rendered_context:
            return False
        if self.unless is not None and self.unless in request.rendered_context:
            return False
        return True


@dataclass
class ScriptedPolicy:
    """Ordered first-match-wins rule list; a pure function of the request."""

    rules: list[ScriptRule] = field(default_factory=list)

    def decide(self, request: ReasoningRequest) -> Decision:
        for rule in self.rules:
            if rule.matches(request):
                return rule.decision
        return Decision.fail("no applicable action")

    def invoke_rule_count(self, agent: Optional[str] = None) -> int:
        from qcorch.messages import ActionKind

        return sum(
            1
            for r in self.rules
            if r.decision.action is ActionKind.INVOKE_TOOL
            and (agent is None or r.agent == agent)
        )


_RULE_RE = re.compile(
    r"^rule\s+agent=(?P<agent>\S+)"
    r"(?:\s+when=\"(?P<when>(?:[^\"\\]|\\.)*)\")?"
    r"(?:\s+unless=\"(?P<unless>(?:[^\"\\]|\\.)*)\")?"
    r"\s+->\s+(?P<decision>.+)$"
)


def _unquote(s: Optional[str]) -> Optional[str]:
    if s is None:
        return None
    return s.replace('\\"', '"').replace("\\\\", "\\")


def parse_rules(text: str) -> ScriptedPolicy:
    """Parse the declarative rules file.

    One rule per line::

        rule agent=<id> [when="<substring>"] [unless="<substring>"] -> <decision>

    where ``<decision>`` uses the shared decision grammar
    (``invoke <tool> {json}``, ``delegate <child> :: <body>``,
    ``respond :: <text>``, ``fail :: <reason>``). ``#`` starts a comment;
    the first matching rule wins.
    """
    policy = ScriptedPolicy()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _RULE_RE.match(line)
        if not m:
            raise ValueError(f"rules file line {lineno}: cannot parse {line!r}")
        try:
            decision = parse_decision_line(m.group("decision"))
        except DecisionParseError as e:
            raise ValueError(f"rules file line {lineno}: {e}") from None
        policy.rules.append(
            ScriptRule(
                agent=m.group("agent"),
                when=_unquote(m.group("when")),
                unless=_unquote(m.group("unless")),
                decision=decision,
            )
        )
    return policy


def load_rules(path: Union[str, Path]) -> ScriptedPolicy:
    return parse_rules(Path(path).read_text())


class ScriptedBackend:
    """Reasoning backend wrapping a scripted policy; referentially
    transparent and shared safely across concurrent sessions."""

    def __init__(self, policy: ScriptedPolicy):
        self.policy = policy

    def decide(self, request: ReasoningRequest) -> tuple[Decision, UsageRecord]:
        decision = self.policy.decide(request)
        usage = UsageRecord(
            agent_id=request.agent_id,
            tokens_in=count_tokens(request.rendered_context),
            tokens_out=count_tokens(decision.render()),
        )
        return decision, usage


class EndpointError(RuntimeError):
    """Live endpoint unreachable after retries."""


class ModelReplyError(RuntimeError):
    """Live endpoint replied, but not with a parsable decision."""

    def __init__(self, message: str, raw_reply: str):
        super().__init__(message)
        self.raw_reply = raw_reply


class LiveBackend:
    """Remote reasoning endpoint.

    Wire format: JSON POST ``{agent_id, context, allowed_actions}`` to the
    URL from ``QCORCH_LLM_ENDPOINT`` (credential, if any, from
    ``QCORCH_LLM_KEY`` as a bearer token); the reply must be JSON with a
    ``decision`` field holding one decision-grammar line. Failures are
    retried with exponential backoff (3 attempts) then surfaced.
    """

    def __init__(
        self,
        endpoint: Optional[str] = None,
        credential: Optional[str] = None,
        attempts: int = 3,
        backoff_s: float = 0.2,
        timeout_s: float = 60.0,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not self.endpoint:
            raise ValueError(f"live backend requires an endpoint ({ENDPOINT_ENV})")
        self.credential = credential or os.environ.get(CREDENTIAL_ENV)
        self.attempts = attempts
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s

    def _post(self, payload: dict) -> str:
        request = urllib.request.Request(
            self.endpoint,
            data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        if self.credential:
            request.add_header("Authorization", f"Bearer {self.credential}")
        with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
            return response.read().decode("utf-8")

    def decide(self, request: ReasoningRequest) -> tuple[Decision, UsageRecord]:
        payload = {
            "agent_id": request.agent_id,
            "context": request.rendered_context,
            "allowed_actions": list(request.allowed_actions),
        }
        last_error: Optional[Exception] = None
        raw = None
        for attempt in range(self.attempts):
            try:
                raw = self._post(payload)
                break
            except (urllib.error.URLError, OSError) as e:
                last_error = e
                if attempt + 1 < self.attempts:
                    time.sleep(self.backoff_s * (2**attempt))
        if raw is None:
            raise EndpointError(f"endpoint unreachable after {self.attempts} attempts: {last_error}")

        try:
            reply = json.loads(raw)
            decision = parse_decision_line(reply["decision"])
        except (json.JSONDecodeError, KeyError, TypeError, DecisionParseError) as e:
            raise ModelReplyError(f"malformed model reply: {e}", raw_reply=raw) from None
        usage = UsageRecord(
            agent_id=request.agent_id,
            tokens_in=count_tokens(request.rendered_context),
            tokens_out=count_tokens(raw),
        )
        return decision, usage
