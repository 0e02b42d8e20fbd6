import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, strategies as st

from qcorch.messages import ActionKind, Decision, DecisionParseError, parse_decision_line
from qcorch.reasoning import (
    EndpointError,
    LiveBackend,
    ModelReplyError,
    ReasoningRequest,
    ScriptedBackend,
    ScriptedPolicy,
    ScriptRule,
    UsageLedger,
    UsageRecord,
    count_tokens,
    parse_rules,
)


class TestDecisionGrammar:
    def test_invoke_roundtrip(self):
        d = Decision.invoke_tool("parse_xyz_file", {"path": "a.xyz", "n": 3})
        assert parse_decision_line(d.render()) == d

    def test_delegate_roundtrip_with_newlines(self):
        d = Decision.delegate("dft_agent", "line one\nline two")
        assert parse_decision_line(d.render()) == d

    def test_respond_and_fail(self):
        assert parse_decision_line("respond :: all done").body == "all done"
        assert parse_decision_line("fail :: no applicable action").action is ActionKind.FAIL

    def test_invoke_without_args(self):
        d = parse_decision_line("invoke list_dir")
        assert d.args == {}

    @pytest.mark.parametrize(
        "bad",
        ["", "ponder :: deeply", "invoke", "delegate child no-separator", "respond no-sep"],
    )
    def test_malformed_rejected(self, bad):
        with pytest.raises(DecisionParseError):
            parse_decision_line(bad)

    def test_bad_json_args_rejected(self):
        with pytest.raises(DecisionParseError, match="args"):
            parse_decision_line("invoke tool {not json}")


class TestCountTokens:
    def test_empty(self):
        assert count_tokens("") == 0

    def test_four_bytes(self):
        assert count_tokens("abcd") == 1

    def test_ten_bytes(self):
        assert count_tokens("abcdefghij") == 3  # ceil(10/4)

    def test_multibyte_counts_bytes(self):
        assert count_tokens("é") == 1  # 2 bytes -> ceil(2/4)

    @given(st.text(max_size=500), st.text(max_size=500))
    def test_subadditive_within_one(self, a, b):
        whole = count_tokens(a + b)
        parts = count_tokens(a) + count_tokens(b)
        assert whole <= parts <= whole + 1

    @given(st.text(max_size=300), st.text(min_size=1, max_size=100))
    def test_monotone_in_byte_length(self, a, suffix):
        assert count_tokens(a + suffix) >= count_tokens(a)


RULES_TEXT = """
# later-stage rules first; first match wins
rule agent=root when="[report]" -> respond :: workflow finished
rule agent=root when="optimize" -> delegate geometry_optimization :: optimize the structure
rule agent=geometry_optimization -> invoke xtb_optimize {"path": "m.xyz"}
rule agent=* when="emergency" -> fail :: aborted
"""


class TestScriptedPolicy:
    def test_first_match_wins(self):
        policy = parse_rules(RULES_TEXT)
        request = ReasoningRequest("root", "task: optimize X please")
        d = policy.decide(request)
        assert d.action is ActionKind.DELEGATE
        assert d.target == "geometry_optimization"

    def test_later_stage_rule_takes_over(self):
        policy = parse_rules(RULES_TEXT)
        request = ReasoningRequest("root", "task: optimize X\n[report] done")
        assert policy.decide(request).action is ActionKind.RESPOND

    def test_empty_rules_fail_decision(self):
        policy = ScriptedPolicy()
        d = policy.decide(ReasoningRequest("root", "anything"))
        assert d.action is ActionKind.FAIL
        assert d.body == "no applicable action"

    def test_wildcard_agent(self):
        policy = parse_rules(RULES_TEXT)
        d = policy.decide(ReasoningRequest("someone", "emergency stop"))
        assert d.action is ActionKind.FAIL

    def test_unless_guard(self):
        policy = parse_rules(
            'rule agent=a when="go" unless="stop" -> respond :: moving\n'
            'rule agent=a -> fail :: blocked\n'
        )
        assert policy.decide(ReasoningRequest("a", "go")).action is ActionKind.RESPOND
        assert policy.decide(ReasoningRequest("a", "go stop")).action is ActionKind.FAIL

    def test_referential_transparency(self):
        backend = ScriptedBackend(parse_rules(RULES_TEXT))
        request = ReasoningRequest("root", "optimize")
        d1, u1 = backend.decide(request)
        d2, u2 = backend.decide(request)
        assert d1 == d2
        assert (u1.tokens_in, u1.tokens_out) == (u2.tokens_in, u2.tokens_out)

    def test_rule_parse_error_names_line(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_rules("# fine\nrule agent=a nonsense\n")

    def test_scripted_rule_hit_verbatim(self):
        decision = Decision.invoke_tool("t", {"a": 1})
        policy = ScriptedPolicy([ScriptRule(agent="x", decision=decision)])
        assert policy.decide(ReasoningRequest("x", "")) is decision

    def test_usage_recorded(self):
        backend = ScriptedBackend(parse_rules(RULES_TEXT))
        _, usage = backend.decide(ReasoningRequest("root", "optimize now"))
        assert usage.tokens_in == count_tokens("optimize now")
        assert usage.tokens_out > 0


class TestUsageLedger:
    def test_cumulative_per_agent_and_session(self):
        ledger = UsageLedger()
        ledger.add(UsageRecord("a", 10, 2))
        ledger.add(UsageRecord("a", 5, 1))
        ledger.add(UsageRecord("b", 7, 3))
        assert ledger.per_agent["a"] == {"tokens_in": 15, "tokens_out": 3}
        assert ledger.session_total == {"tokens_in": 22, "tokens_out": 6}


class _StubHandler(BaseHTTPRequestHandler):
    responses: list = []

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        type(self).last_request = json.loads(self.rfile.read(length))
        status, body = type(self).responses.pop(0)
        payload = body.encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_endpoint():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", _StubHandler
    server.shutdown()


class TestLiveBackend:
    def test_decision_parsed_and_usage_counted(self, stub_endpoint):
        url, handler = stub_endpoint
        handler.responses = [(200, json.dumps({"decision": "respond :: hello"}))]
        backend = LiveBackend(endpoint=url, backoff_s=0.0)
        decision, usage = backend.decide(ReasoningRequest("root", "ctx", ["respond"]))
        assert decision.action is ActionKind.RESPOND
        assert handler.last_request["agent_id"] == "root"
        assert usage.tokens_in == count_tokens("ctx")

    def test_nonconforming_reply_preserves_raw(self, stub_endpoint):
        url, handler = stub_endpoint
        handler.responses = [(200, "I am not JSON at all")]
        backend = LiveBackend(endpoint=url, backoff_s=0.0)
        with pytest.raises(ModelReplyError) as err:
            backend.decide(ReasoningRequest("root", "ctx"))
        assert err.value.raw_reply == "I am not JSON at all"

    def test_unreachable_endpoint_after_retries(self):
        backend = LiveBackend(endpoint="http://127.0.0.1:1", attempts=2, backoff_s=0.0)
        with pytest.raises(EndpointError, match="2 attempts"):
            backend.decide(ReasoningRequest("root", "ctx"))

    def test_requires_endpoint(self, monkeypatch):
        monkeypatch.delenv("QCORCH_LLM_ENDPOINT", raising=False)
        with pytest.raises(ValueError):
            LiveBackend()
