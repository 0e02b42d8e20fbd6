import pytest

from qcorch.agents import (
    AgentSpec,
    Hierarchy,
    HierarchyError,
    RunController,
    Session,
    SessionLimits,
)
from qcorch.messages import MessageKind
from qcorch.reasoning import ScriptedBackend, parse_rules
from qcorch.tools import Parameter, ToolRegistry, ToolResult, ToolSpec


def base_registry():
    registry = ToolRegistry()
    registry.register(
        ToolSpec(
            name="echo",
            description="echoes text",
            parameters=[Parameter("text", "str")],
            handler=lambda text: ToolResult(ok=True, payload=text, summary=f"echoed: {text}"),
        )
    )
    registry.register(
        ToolSpec(
            name="noise",
            description="produces a large payload",
            handler=lambda: ToolResult(
                ok=True, payload="N" * 30000, summary="made 30000 bytes of noise"
            ),
        )
    )
    return registry


def make_session(tmp_path, agents, root, rules, registry=None, limits=None, controller=None):
    registry = registry or base_registry()
    hierarchy = Hierarchy(agents, root, registry)
    backend = ScriptedBackend(parse_rules(rules))
    return Session(
        "s1",
        tmp_path / "session",
        hierarchy,
        registry,
        backend,
        limits=limits,
        controller=controller,
    )


THREE_AGENTS = [
    AgentSpec(id="root", role_text="plans", callable_modules=["mid", "echo"]),
    AgentSpec(id="mid", role_text="executes", callable_modules=["leaf", "noise"]),
    AgentSpec(id="leaf", role_text="does detail work", callable_modules=["noise"]),
]

THREE_LEVEL_RULES = """
rule agent=root when="[report]" -> respond :: chain complete
rule agent=root -> delegate mid :: run the middle stage
rule agent=mid when="[report]" -> respond :: middle done
rule agent=mid -> delegate leaf :: run the leaf stage
rule agent=leaf when="made 30000 bytes" -> respond :: leaf done
rule agent=leaf -> invoke noise
"""


class TestHierarchy:
    def test_unregistered_reference_rejected(self):
        agents = [AgentSpec(id="root", role_text="", callable_modules=["ghost"])]
        with pytest.raises(HierarchyError, match="unregistered"):
            Hierarchy(agents, "root", base_registry())

    def test_cycle_rejected(self):
        agents = [
            AgentSpec(id="a", role_text="", callable_modules=["b"]),
            AgentSpec(id="b", role_text="", callable_modules=["a"]),
        ]
        with pytest.raises(HierarchyError, match="cycle"):
            Hierarchy(agents, "a", base_registry())

    def test_depth_limit_enforced(self):
        agents = [
            AgentSpec(id=f"a{i}", role_text="", callable_modules=[f"a{i+1}"]) for i in range(7)
        ] + [AgentSpec(id="a7", role_text="")]
        with pytest.raises(HierarchyError, match="depth"):
            Hierarchy(agents, "a0", base_registry())

    def test_depth_six_accepted(self):
        agents = [
            AgentSpec(id=f"a{i}", role_text="", callable_modules=[f"a{i+1}"]) for i in range(6)
        ] + [AgentSpec(id="a6", role_text="")]
        h = Hierarchy(agents, "a0", base_registry())
        assert h.depth("a6") == 6

    def test_edges(self):
        h = Hierarchy(THREE_AGENTS, "root", base_registry())
        assert ("root", "mid") in h.edges()
        assert ("mid", "leaf") in h.edges()
        assert all(t != "noise" for _, t in h.edges())


class TestWorkingMemory:
    def test_fresh_session_root(self, tmp_path):
        session = make_session(tmp_path, THREE_AGENTS, "root", "")
        (session.workdir / "a").mkdir()
        (session.workdir / "a/1.xyz").write_text("1\n\nH 0 0 0\n")
        from qcorch.messages import Message

        session.conversations["root"].append(
            session._message(MessageKind.USER, "user", "root", "optimize X")
        )
        wm = session.assemble_working_memory(session.hierarchy.get("root"))
        assert wm.global_excerpt == []
        assert [m.body for m in wm.conversation] == ["optimize X"]
        assert wm.grounding.paths() == ["a", "a/1.xyz"]
        assert wm.token_estimate > 0

    def test_child_memory_excludes_roots_other_conversations(self, tmp_path):
        session = make_session(tmp_path, THREE_AGENTS, "root", THREE_LEVEL_RULES)
        session.run("go")
        mid_ids = {m.id for m in session.conversations["mid"]}
        root_ids = {m.id for m in session.conversations["root"]}
        # mid sees only its own exchanges: the root command and its own report
        assert mid_ids - root_ids  # mid has private messages (leaf exchange)
        for m in session.conversations["mid"]:
            assert "mid" in (m.sender, m.recipient)

    def test_byte_stable_rendering(self, tmp_path):
        session = make_session(tmp_path, THREE_AGENTS, "root", "")
        wm1 = session.assemble_working_memory(session.hierarchy.get("root"))
        wm2 = session.assemble_working_memory(session.hierarchy.get("root"))
        assert wm1.render() == wm2.render()


class TestStep:
    def test_scripted_delegate_lookup(self, tmp_path):
        rules = 'rule agent=root when="optimize" -> delegate mid :: optimize it\n'
        session = make_session(tmp_path, THREE_AGENTS, "root", rules)
        session.conversations["root"].append(
            session._message(MessageKind.USER, "user", "root", "optimize X")
        )
        wm = session.assemble_working_memory(session.hierarchy.get("root"))
        decision = session.step(session.hierarchy.get("root"), wm)
        assert decision.target == "mid"

    def test_empty_policy_fails(self, tmp_path):
        session = make_session(tmp_path, THREE_AGENTS, "root", "")
        wm = session.assemble_working_memory(session.hierarchy.get("root"))
        decision = session.step(session.hierarchy.get("root"), wm)
        assert decision.body == "no applicable action"

    def test_out_of_space_tool_becomes_violation_after_retries(self, tmp_path):
        rules = 'rule agent=root -> invoke noise\n'  # noise not callable by root
        session = make_session(tmp_path, THREE_AGENTS, "root", rules)
        result = session.run("anything")
        assert result.status == "failed"
        assert "action-space violation" in result.final_response
        # retried twice then surfaced: 3 decision steps consumed
        assert result.steps == 3

    def test_delegate_to_tool_is_violation(self, tmp_path):
        rules = 'rule agent=root -> delegate echo :: hello\n'
        session = make_session(tmp_path, THREE_AGENTS, "root", rules)
        result = session.run("anything")
        assert result.status == "failed"
        assert "action-space violation" in result.final_response


class TestDelegateReport:
    def test_exchange_adds_exactly_two_messages_to_root(self, tmp_path):
        rules = """
rule agent=root when="[report]" -> respond :: done
rule agent=root -> delegate mid :: please work
rule agent=mid -> respond :: mid finished
"""
        session = make_session(tmp_path, THREE_AGENTS, "root", rules)
        session.run("task")
        kinds = [m.kind for m in session.conversations["root"]]
        assert kinds == [MessageKind.USER, MessageKind.COMMAND, MessageKind.REPORT]

    def test_report_body_is_capped(self, tmp_path):
        rules = (
            'rule agent=root when="[report]" -> respond :: done\n'
            "rule agent=root -> delegate mid :: make noise\n"
            'rule agent=mid when="made 30000 bytes" -> respond :: '
            + "N" * 5000
            + "\nrule agent=mid -> invoke noise\n"
        )
        session = make_session(tmp_path, THREE_AGENTS, "root", rules)
        session.run("task")
        report = [m for m in session.conversations["root"] if m.kind is MessageKind.REPORT][0]
        assert len(report.body) <= 2000
        assert report.body.endswith("...[truncated]")

    def test_depth3_chain_root_sees_no_deep_tool_results(self, tmp_path):
        session = make_session(tmp_path, THREE_AGENTS, "root", THREE_LEVEL_RULES)
        result = session.run("go")
        assert result.status == "done"
        root_kinds = {m.kind for m in session.conversations["root"]}
        assert MessageKind.TOOL_RESULT not in root_kinds
        # context isolation: no tool_result in root or mid originates at depth >= +2
        for agent_id, max_origin_depth in (("root", 1), ("mid", 2)):
            for m in session.conversations[agent_id]:
                if m.kind is MessageKind.TOOL_RESULT:
                    assert session.hierarchy.depth(m.origin) <= max_origin_depth

    def test_exchange_ids_pair_commands_and_reports(self, tmp_path):
        session = make_session(tmp_path, THREE_AGENTS, "root", THREE_LEVEL_RULES)
        session.run("go")
        for agent in ("root", "mid", "leaf"):
            commands = [
                m.exchange_id
                for m in session.conversations[agent]
                if m.kind is MessageKind.COMMAND
            ]
            replies = [
                m.exchange_id
                for m in session.conversations[agent]
                if m.kind in (MessageKind.REPORT, MessageKind.ERROR)
            ]
            assert sorted(commands) == sorted(replies)


class TestRunSession:
    def test_counters_and_conservation(self, tmp_path):
        session = make_session(tmp_path, THREE_AGENTS, "root", THREE_LEVEL_RULES)
        result = session.run("go")
        assert result.status == "done"
        assert result.counters["commanding"] == 2  # root->mid, mid->leaf
        assert result.counters["reporting"] == 2
        assert result.counters["acting"] == 1  # leaf invoked noise once
        assert result.counters["reporting"] == result.counters["commanding"]

    def test_zero_step_budget(self, tmp_path):
        session = make_session(
            tmp_path, THREE_AGENTS, "root", THREE_LEVEL_RULES, limits=SessionLimits(max_steps=0)
        )
        result = session.run("go")
        assert result.status == "budget_exceeded"

    def test_budget_mid_run_preserves_conservation(self, tmp_path):
        session = make_session(
            tmp_path, THREE_AGENTS, "root", THREE_LEVEL_RULES, limits=SessionLimits(max_steps=3)
        )
        result = session.run("go")
        assert result.status == "budget_exceeded"
        # every command is paired with exactly one report or error even when
        # the budget dies mid-chain
        unique = {}
        for conv in session.conversations.values():
            for m in conv:
                unique[m.id] = m
        commands = [m for m in unique.values() if m.kind is MessageKind.COMMAND]
        reports = [m for m in unique.values() if m.kind is MessageKind.REPORT]
        errors = [m for m in unique.values() if m.kind is MessageKind.ERROR]
        assert len(commands) == len(reports) + len(errors) > 0

    def test_deterministic_traces(self, tmp_path):
        s1 = make_session(tmp_path / "a", THREE_AGENTS, "root", THREE_LEVEL_RULES)
        s2 = make_session(tmp_path / "b", THREE_AGENTS, "root", THREE_LEVEL_RULES)
        s1.run("go")
        s2.run("go")
        assert s1.trace.canonical_lines() == s2.trace.canonical_lines()

    def test_failed_root_status(self, tmp_path):
        rules = "rule agent=root -> fail :: cannot proceed\n"
        session = make_session(tmp_path, THREE_AGENTS, "root", rules)
        result = session.run("go")
        assert result.status == "failed"
        assert result.final_response == "cannot proceed"

    def test_context_report_collected(self, tmp_path):
        session = make_session(tmp_path, THREE_AGENTS, "root", THREE_LEVEL_RULES)
        result = session.run("go")
        assert set(result.context_report) == {"root", "mid", "leaf"}
        assert 0 < result.root_context_share < 1


class TestForgetful:
    AGENTS = [
        AgentSpec(id="root", role_text="", callable_modules=["scribe"]),
        AgentSpec(id="scribe", role_text="", callable_modules=["echo"], forgetful=True),
    ]
    RULES = """
rule agent=root when="second done" -> respond :: all done
rule agent=root when="[report]" -> delegate scribe :: second subtask
rule agent=root -> delegate scribe :: first subtask
rule agent=scribe when="second subtask" unless="echoed: two" -> invoke echo {"text": "two"}
rule agent=scribe when="echoed: two" -> respond :: second done
rule agent=scribe when="echoed: one" -> respond :: first done
rule agent=scribe -> invoke echo {"text": "one"}
"""

    def test_conversation_cleared_after_each_report(self, tmp_path):
        session = make_session(tmp_path, self.AGENTS, "root", self.RULES)
        result = session.run("do two subtasks")
        assert result.status == "done"
        assert session.conversations["scribe"] == []
        # two closed-out context sizes recorded, one per completed subtask
        assert len(result.context_report["scribe"]) == 2

    def test_forgetful_requires_fresh_context_per_subtask(self, tmp_path):
        session = make_session(tmp_path, self.AGENTS, "root", self.RULES)
        session.run("do two subtasks")
        reports = [
            m.body
            for m in session.conversations["root"]
            if m.kind is MessageKind.REPORT
        ]
        assert reports == ["first done", "second done"]


class TestMessageInjection:
    def test_posted_message_lands_in_target_conversation(self, tmp_path):
        rules = """
rule agent=root when="steering note" -> respond :: saw the note
rule agent=root -> delegate mid :: stall
rule agent=mid -> respond :: stalled
"""
        session = make_session(tmp_path, THREE_AGENTS, "root", rules)
        session.post_message("root", "steering note")
        result = session.run("go")
        assert result.status == "done"
        assert result.final_response == "saw the note"
        user_msgs = [
            m for m in session.conversations["root"] if m.kind is MessageKind.USER
        ]
        assert any(m.body == "steering note" for m in user_msgs)

    def test_unknown_target_rejected(self, tmp_path):
        session = make_session(tmp_path, THREE_AGENTS, "root", "")
        with pytest.raises(HierarchyError):
            session.post_message("nobody", "hi")


class TestLiveBackendFailures:
    def _session_with_backend(self, tmp_path, backend):
        registry = base_registry()
        hierarchy = Hierarchy(THREE_AGENTS, "root", registry)
        return Session("s1", tmp_path / "s", hierarchy, registry, backend)

    def test_malformed_reply_lands_in_trace_and_fails_run(self, tmp_path):
        from qcorch.reasoning import ModelReplyError

        class GarbageBackend:
            def decide(self, request):
                raise ModelReplyError("malformed model reply", raw_reply="I like turtles")

        session = self._session_with_backend(tmp_path, GarbageBackend())
        result = session.run("do something")
        assert result.status == "failed"
        assert "parse error" in result.final_response
        errors = [e for e in session.trace.events() if e.title == "model reply parse error"]
        assert errors
        assert session.trace.payload_text(errors[0]) == "I like turtles"

    def test_unreachable_endpoint_fails_run(self, tmp_path):
        from qcorch.reasoning import EndpointError

        class DeadBackend:
            def decide(self, request):
                raise EndpointError("endpoint unreachable after 3 attempts")

        session = self._session_with_backend(tmp_path, DeadBackend())
        result = session.run("do something")
        assert result.status == "failed"
        assert "unreachable" in result.final_response
