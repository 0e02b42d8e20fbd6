"""Agent nodes, the hierarchy, the delegation/reporting protocol, and the
per-step decision loop that drives a session."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from qcorch.memory import (
    EpisodicStore,
    GlobalMemory,
    GlobalMemoryEntry,
    GroundingSnapshot,
    SemanticMemory,
    SemanticMemoryEntry,
    snapshot_grounding,
)
from qcorch.messages import ActionKind, Decision, Message, MessageKind
from qcorch.reasoning import (
    EndpointError,
    ModelReplyError,
    ReasoningRequest,
    UsageLedger,
    count_tokens,
)
from qcorch.tools import ToolRegistry, cap_summary
from qcorch.trace import EventKind, Trace

USER = "user"


@dataclass
class AgentSpec:
    """A node in the agent network: role context, semantic tags, and the
    ordered action space (child agents and tools)."""

    id: str
    role_text: str
    callable_modules: list[str] = field(default_factory=list)
    semantic_keys: list[str] = field(default_factory=list)
    context_doc: dict = field(default_factory=dict)
    model_binding: str = "scripted"
    forgetful: bool = False


class HierarchyError(ValueError):
    pass


MAX_HIERARCHY_DEPTH = 6


class Hierarchy:
    """Validated agent graph: every callable reference resolves, the graph
    rooted at the top-level agent is acyclic, and no node sits more than six
    hops below the root. Checked at registration."""

    def __init__(self, agents: Sequence[AgentSpec], root: str, registry: ToolRegistry):
        self.agents = {a.id: a for a in agents}
        if len(self.agents) != len(agents):
            raise HierarchyError("duplicate agent ids")
        if root not in self.agents:
            raise HierarchyError(f"root agent {root!r} not in hierarchy")
        self.root_id = root
        self.registry = registry
        self._depths: dict[str, int] = {}
        self._validate()

    def _validate(self):
        for agent in self.agents.values():
            for target in agent.callable_modules:
                if target not in self.agents and target not in self.registry:
                    raise HierarchyError(
                        f"agent {agent.id!r} references unregistered module {target!r}"
                    )
        # acyclicity + depth over the agent-to-agent edges reachable from root
        state: dict[str, int] = {}  # 1 = on stack, 2 = done

        def visit(agent_id: str, depth: int):
            if depth > MAX_HIERARCHY_DEPTH:
                raise HierarchyError(
                    f"agent {agent_id!r} at depth {depth} exceeds the limit of "
                    f"{MAX_HIERARCHY_DEPTH}"
                )
            self._depths[agent_id] = min(self._depths.get(agent_id, depth), depth)
            if state.get(agent_id) == 1:
                raise HierarchyError(f"callable graph has a cycle through {agent_id!r}")
            if state.get(agent_id) == 2:
                return
            state[agent_id] = 1
            for target in self.agents[agent_id].callable_modules:
                if target in self.agents:
                    visit(target, depth + 1)
            state[agent_id] = 2

        visit(self.root_id, 0)

    def get(self, agent_id: str) -> AgentSpec:
        if agent_id not in self.agents:
            raise HierarchyError(f"unknown agent {agent_id!r}")
        return self.agents[agent_id]

    def depth(self, agent_id: str) -> int:
        return self._depths.get(agent_id, -1)

    def is_agent(self, name: str) -> bool:
        return name in self.agents

    def edges(self) -> list[tuple[str, str]]:
        return [
            (a.id, t)
            for a in self.agents.values()
            for t in a.callable_modules
            if t in self.agents
        ]


@dataclass
class WorkingMemory:
    """The four-part context assembled for one reasoning step."""

    agent_id: str
    global_excerpt: list[GlobalMemoryEntry]
    conversation: list[Message]
    grounding: GroundingSnapshot
    retrieved: list[SemanticMemoryEntry]
    role_text: str = ""
    token_estimate: int = 0

    def render(self) -> str:
        """Stable serialization; byte-identical for identical memory state."""
        parts = [f"=== agent: {self.agent_id} ===", self.role_text]
        if self.retrieved:
            parts.append("=== semantic memory ===")
            parts.extend(e.text for e in self.retrieved)
        parts.append("=== global memory ===")
        parts.extend(f"{e.seq} {e.author}: {e.text}" for e in self.global_excerpt)
        parts.append("=== grounding ===")
        parts.append(self.grounding.render())
        parts.append("=== conversation ===")
        parts.extend(m.render() for m in self.conversation)
        return "\n".join(parts)


@dataclass
class SessionLimits:
    max_steps: int = 500
    max_depth: int = MAX_HIERARCHY_DEPTH
    retry_cap: int = 2  # re-asks after an action-space violation
    summary_cap: int = 2000
    global_excerpt_k: int = 50


@dataclass
class SessionResult:
    status: str  # done | failed | budget_exceeded
    final_response: str
    counters: dict[str, int]
    usage_per_agent: dict[str, dict[str, int]]
    context_report: dict[str, list[int]]
    root_id: str = ""
    steps: int = 0

    @property
    def root_context_share(self) -> float:
        """Root agent's final context as a fraction of the summed per-agent
        final contexts (forgetful agents contribute one term per use)."""
        whole = sum(t for sizes in self.context_report.values() for t in sizes)
        if not whole:
            return 0.0
        root_sizes = self.context_report.get(self.root_id, [0])
        return root_sizes[-1] / whole

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "final_response": self.final_response,
            "counters": self.counters,
            "usage_per_agent": self.usage_per_agent,
            "context_report": self.context_report,
            "root_id": self.root_id,
            "root_context_share": self.root_context_share,
            "steps": self.steps,
        }


class BudgetExceeded(RuntimeError):
    pass


class RunController:
    """Pause/resume gate plus breakpoint set, shared with the service layer.

    Pausing takes effect at the next step boundary; a breakpoint
    (agent, kind) auto-pauses before the matching action executes.
    """

    def __init__(self):
        self._resume = threading.Event()
        self._resume.set()
        self.breakpoints: set[tuple[str, str]] = set()
        self.paused = False
        self.on_state_change = lambda paused: None

    def pause(self):
        self.paused = True
        self._resume.clear()
        self.on_state_change(True)

    def resume(self):
        self.paused = False
        self._resume.set()
        self.on_state_change(False)

    def wait_at_boundary(self):
        self._resume.wait()

    def hit_breakpoint(self, agent_id: str, kind: str) -> bool:
        return (agent_id, kind) in self.breakpoints


class Session:
    """One task execution: a single logical decision loop over the hierarchy.

    The loop owns all conversations and the trace; it may await job
    completion inside tool handlers, but never reasons for two agents at
    once. Multiple Session instances are fully independent.
    """

    def __init__(
        self,
        session_id: str,
        session_dir: Union[str, Path],
        hierarchy: Hierarchy,
        registry: ToolRegistry,
        backend,
        limits: Optional[SessionLimits] = None,
        semantic: Optional[SemanticMemory] = None,
        episodic: Optional[EpisodicStore] = None,
        controller: Optional[RunController] = None,
    ):
        self.id = session_id
        self.session_dir = Path(session_dir)
        self.workdir = self.session_dir / "work"
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.hierarchy = hierarchy
        self.registry = registry
        self.backend = backend
        self.limits = limits or SessionLimits()
        self.trace = Trace(self.session_dir / "trace")
        self.global_memory = GlobalMemory(self.session_dir)
        self.semantic = semantic or SemanticMemory()
        self.episodic = episodic or EpisodicStore()
        self.controller = controller or RunController()
        self.usage = UsageLedger()
        self.conversations: dict[str, list[Message]] = {
            a: [] for a in hierarchy.agents
        }
        self.degraded = False
        self._msg_seq = 0
        self._exchange_seq = 0
        self._steps = 0
        self._inbox: list[tuple[str, str]] = []
        self._inbox_lock = threading.Lock()
        # final context estimates: closed-out entries per agent (forgetful
        # agents accumulate one per completed subtask) plus the live latest
        self._finished_contexts: dict[str, list[int]] = {}
        self._latest_context: dict[str, int] = {}

    # -- identifiers --------------------------------------------------------

    def _next_message_id(self) -> str:
        self._msg_seq += 1
        return f"m{self._msg_seq:05d}"

    def _next_exchange_id(self) -> str:
        self._exchange_seq += 1
        return f"x{self._exchange_seq:04d}"

    # -- messaging ----------------------------------------------------------

    def _message(self, kind, sender, recipient, body, summary=None, exchange_id=None, origin=None):
        return Message(
            id=self._next_message_id(),
            session_id=self.id,
            kind=kind,
            sender=sender,
            recipient=recipient,
            body=body,
            summary=summary,
            timestamp=time.time(),
            exchange_id=exchange_id,
            origin=origin,
        )

    def post_message(self, target: str, text: str):
        """Queue a user message for an agent; it enters that agent's
        conversation at the next step boundary."""
        self.hierarchy.get(target)
        with self._inbox_lock:
            self._inbox.append((target, text))

    def _drain_inbox(self):
        with self._inbox_lock:
            pending, self._inbox = self._inbox, []
        for target, text in pending:
            msg = self._message(MessageKind.USER, USER, target, text)
            self.conversations[target].append(msg)
            self.trace.record(
                USER, EventKind.USER, f"message to {target}", cap_summary(text, 200), payload=text
            )

    # -- working memory -----------------------------------------------------

    def assemble_working_memory(self, agent: AgentSpec) -> WorkingMemory:
        wm = WorkingMemory(
            agent_id=agent.id,
            global_excerpt=self.global_memory.tail(self.limits.global_excerpt_k),
            conversation=list(self.conversations[agent.id]),
            grounding=snapshot_grounding(self.workdir),
            retrieved=self.semantic.retrieve(agent.id, agent.semantic_keys),
            role_text=agent.role_text,
        )
        wm.token_estimate = count_tokens(wm.render())
        self._latest_context[agent.id] = wm.token_estimate
        return wm

    def _close_context(self, agent_id: str):
        latest = self._latest_context.pop(agent_id, None)
        if latest is not None:
            self._finished_contexts.setdefault(agent_id, []).append(latest)

    def context_report(self) -> dict[str, list[int]]:
        report: dict[str, list[int]] = {}
        for agent_id in self.hierarchy.agents:
            sizes = list(self._finished_contexts.get(agent_id, []))
            if agent_id in self._latest_context:
                sizes.append(self._latest_context[agent_id])
            if sizes:
                report[agent_id] = sizes
        return report

    # -- stepping -----------------------------------------------------------

    def _boundary(self):
        self.controller.wait_at_boundary()
        self._drain_inbox()

    def _breakpoint_gate(self, agent_id: str, kind: EventKind):
        # breakpoint pauses are control-plane state, not trace events: the
        # trace must be identical whether or not the run was interrupted
        if self.controller.hit_breakpoint(agent_id, kind.value):
            self.controller.pause()
            self.controller.wait_at_boundary()
            self._drain_inbox()

    def step(self, agent: AgentSpec, wm: WorkingMemory) -> Decision:
        """One reasoning step: ask the backend, enforce the action space,
        re-ask up to the retry cap on violations."""
        request = ReasoningRequest(
            agent_id=agent.id,
            rendered_context=wm.render(),
            allowed_actions=list(agent.callable_modules),
        )
        last_violation = ""
        for attempt in range(self.limits.retry_cap + 1):
            if self._steps >= self.limits.max_steps:
                raise BudgetExceeded(f"step budget of {self.limits.max_steps} exhausted")
            self._steps += 1
            try:
                decision, usage = self.backend.decide(request)
            except ModelReplyError as e:
                # the raw reply is preserved in the trace for post-mortems
                self.trace.record(
                    agent.id,
                    EventKind.SYSTEM,
                    "model reply parse error",
                    cap_summary(str(e), 200),
                    payload=e.raw_reply,
                )
                return Decision.fail(f"backend parse error: {e}")
            except EndpointError as e:
                self.trace.record(
                    agent.id, EventKind.SYSTEM, "backend unreachable", cap_summary(str(e), 200)
                )
                return Decision.fail(f"backend unreachable: {e}")
            self.usage.add(usage)
            self.trace.record(
                agent.id,
                EventKind.SYSTEM,
                f"decision {decision.action.value}",
                cap_summary(decision.render(), 200),
                payload=decision.render(),
            )
            violation = self._action_space_violation(agent, decision)
            if violation is None:
                return decision
            last_violation = violation
            self.trace.record(
                agent.id,
                EventKind.SYSTEM,
                "action-space violation",
                f"{violation} (attempt {attempt + 1}/{self.limits.retry_cap + 1})",
            )
        return Decision.fail(f"action-space violation: {last_violation}")

    def _action_space_violation(self, agent: AgentSpec, decision: Decision) -> Optional[str]:
        if decision.action is ActionKind.INVOKE_TOOL:
            if decision.target not in agent.callable_modules:
                return f"tool {decision.target!r} not callable by {agent.id!r}"
            if self.hierarchy.is_agent(decision.target):
                return f"{decision.target!r} is an agent; use delegate"
            if decision.target not in self.registry:
                return f"tool {decision.target!r} is not registered"
        elif decision.action is ActionKind.DELEGATE:
            if decision.target not in agent.callable_modules:
                return f"agent {decision.target!r} not callable by {agent.id!r}"
            if not self.hierarchy.is_agent(decision.target):
                return f"{decision.target!r} is a tool; use invoke_tool"
        return None

    # -- decision application -------------------------------------------------

    def _apply_invoke(self, agent: AgentSpec, decision: Decision):
        self._breakpoint_gate(agent.id, EventKind.ACTING)
        spec = self.registry.get(decision.target)
        call_expr = (
            f"{decision.target}("
            + ", ".join(f"{k}={v!r}" for k, v in sorted(decision.args.items()))
            + ")"
        )
        call_msg = self._message(
            MessageKind.TOOL_CALL, agent.id, decision.target, call_expr, origin=agent.id
        )
        self.conversations[agent.id].append(call_msg)
        result = self.registry.invoke(spec, decision.args)
        result_msg = self._message(
            MessageKind.TOOL_RESULT,
            decision.target,
            agent.id,
            result.payload_text(),
            summary=result.summary,
            origin=agent.id,
        )
        self.conversations[agent.id].append(result_msg)
        self.trace.record(
            agent.id,
            EventKind.ACTING,
            call_expr,
            result.summary,
            payload=f"call: {call_expr}\nok: {result.ok}\n---\n{result.payload_text()}",
        )
        return result

    def delegate(self, parent: AgentSpec, child_id: str, body: str, depth: int) -> str:
        """Run one command/report exchange; returns the child's summary.

        The command and its report (or error) appear in both parties'
        conversations; the report body is the child's summary, never its
        raw tool payloads.
        """
        if not self.hierarchy.is_agent(child_id):
            raise HierarchyError(f"delegation target {child_id!r} is not an agent")
        if depth + 1 > self.limits.max_depth:
            raise HierarchyError(
                f"delegation from {parent.id!r} would exceed max depth {self.limits.max_depth}"
            )
        self._breakpoint_gate(parent.id, EventKind.COMMANDING)
        exchange_id = self._next_exchange_id()
        command = self._message(
            MessageKind.COMMAND, parent.id, child_id, body, exchange_id=exchange_id
        )
        self.conversations[parent.id].append(command)
        self.conversations[child_id].append(command)
        self.trace.record(
            parent.id,
            EventKind.COMMANDING,
            f"{parent.id} -> {child_id}",
            cap_summary(body, 200),
            payload=body,
        )
        try:
            kind, text = self._run_exchange(child_id, depth + 1)
        except BudgetExceeded:
            self._finish_exchange(parent, child_id, exchange_id, "error", "step budget exhausted")
            raise
        self._finish_exchange(parent, child_id, exchange_id, kind, text)
        return text

    def _finish_exchange(self, parent, child_id, exchange_id, kind, text):
        capped = cap_summary(text, self.limits.summary_cap)
        message_kind = MessageKind.REPORT if kind == "report" else MessageKind.ERROR
        self._breakpoint_gate(child_id, EventKind.REPORTING)
        reply = self._message(
            message_kind, child_id, parent.id, capped, summary=capped, exchange_id=exchange_id
        )
        self.conversations[parent.id].append(reply)
        self.conversations[child_id].append(reply)
        if kind == "report":
            self.trace.record(
                child_id,
                EventKind.REPORTING,
                f"{child_id} -> {parent.id}",
                cap_summary(capped, 200),
                payload=capped,
            )
        else:
            self.trace.record(
                child_id,
                EventKind.SYSTEM,
                f"exchange error {child_id} -> {parent.id}",
                cap_summary(capped, 200),
                payload=capped,
            )
        child = self.hierarchy.get(child_id)
        if child.forgetful:
            self.conversations[child_id].clear()
            self._close_context(child_id)

    def _run_exchange(self, agent_id: str, depth: int) -> tuple[str, str]:
        """Drive one agent until it responds or fails."""
        agent = self.hierarchy.get(agent_id)
        while True:
            self._boundary()
            wm = self.assemble_working_memory(agent)
            decision = self.step(agent, wm)
            if decision.action is ActionKind.INVOKE_TOOL:
                self._apply_invoke(agent, decision)
                continue
            if decision.action is ActionKind.DELEGATE:
                self.delegate(agent, decision.target, decision.body, depth)
                continue
            if decision.action is ActionKind.RESPOND:
                return ("report", decision.body)
            return ("error", decision.body)

    # -- entry point ----------------------------------------------------------

    def run(self, task: str) -> SessionResult:
        root = self.hierarchy.get(self.hierarchy.root_id)
        task_msg = self._message(MessageKind.USER, USER, root.id, task)
        self.conversations[root.id].append(task_msg)
        self.trace.record(USER, EventKind.USER, "task", cap_summary(task, 200), payload=task)

        status, final = "done", ""
        try:
            kind, final = self._run_exchange(root.id, depth=0)
            if kind == "error":
                status = "failed"
        except BudgetExceeded as e:
            status, final = "budget_exceeded", str(e)
        self.trace.record(
            "session", EventKind.SYSTEM, f"session {status}", cap_summary(final, 200)
        )
        counters = self.trace.counters()
        return SessionResult(
            status=status,
            final_response=final,
            counters=counters,
            usage_per_agent=dict(self.usage.per_agent),
            context_report=self.context_report(),
            root_id=self.hierarchy.root_id,
            steps=self._steps,
        )
