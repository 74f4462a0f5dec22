from __future__ import annotations

import pytest

from smartetl.errors import CharBudgetExceeded, EndpointFailure, PromptCapExceeded, ReplayMismatch
from smartetl.gateway import (
    NO_RULE_MATCHED,
    EndpointConfig,
    Gateway,
    HttpChatResponder,
    MockResponder,
    ReplayResponder,
    Transcript,
    prompt_hash,
)


def test_budget_and_cap_enforced_before_sending():
    calls = []
    gw = Gateway(lambda c, t: calls.append(t) or "ok", char_budget=10, prompt_cap=2)
    conv = gw.open()
    with pytest.raises(CharBudgetExceeded):
        gw.send(conv, "x" * 11)
    gw.send(conv, "x" * 10)
    gw.send(conv, "y")
    with pytest.raises(PromptCapExceeded):
        gw.send(conv, "z")
    assert calls == ["x" * 10, "y"] and conv.prompt_count == 2


def test_per_conversation_overrides():
    gw = Gateway(lambda c, t: "ok", char_budget=5, prompt_cap=1)
    conv = gw.open(char_budget=None, prompt_cap=None)
    for _ in range(3):
        gw.send(conv, "a long prompt beyond five chars")


def test_mock_rules_first_match_and_fallbacks():
    m = MockResponder([(r"apple", "fruit"), (r"app", "software"), (r"len", lambda t: str(len(t)))])
    assert m(None, "an apple") == "fruit"
    assert m(None, "my app") == "software"
    assert m(None, "len?") == "4"
    assert m(None, "nothing") == NO_RULE_MATCHED
    assert MockResponder(default="d")(None, "x") == "d"
    assert MockResponder(fallback=lambda c, t: t.upper())(None, "x") == "X"


def test_record_then_replay(tmp_path):
    tr = Transcript("mock", timestamp="2026-01-01T00:00:00+00:00")
    gw = Gateway(MockResponder([("a", "A"), ("b", "B")]), transcript=tr)
    conv = gw.open()
    assert [gw.send(conv, p) for p in ("a", "b")] == ["A", "B"]
    tr.dump(tmp_path / "t.jsonl")
    loaded = Transcript.load(tmp_path / "t.jsonl")
    assert loaded.timestamp == tr.timestamp and len(loaded) == 2
    assert loaded.entries[0].prompt_sha256 == prompt_hash("a")
    replay = Gateway(ReplayResponder(loaded))
    conv = replay.open()
    assert [replay.send(conv, p) for p in ("a", "b")] == ["A", "B"]
    with pytest.raises(ReplayMismatch):
        replay.send(replay.open(), "a")


def test_replay_detects_divergent_prompt():
    tr = Transcript(entries=[])
    tr.append("c1", "expected", "r")
    gw = Gateway(ReplayResponder(tr))
    with pytest.raises(ReplayMismatch):
        gw.send(gw.open(), "something else")


class _Resp:
    def __init__(self, status, body=None):
        self.status_code = status
        self._body = body
        self.text = str(body)

    def json(self):
        return self._body


class _Transport:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append((url, json, headers))
        return self.responses.pop(0)


def test_http_responder_retries_then_succeeds(monkeypatch):
    monkeypatch.setenv("LLM_TOKEN", "secret")
    ok = _Resp(200, {"choices": [{"message": {"content": "hello"}}]})
    tr = _Transport([_Resp(503), _Resp(429), ok])
    r = HttpChatResponder(EndpointConfig("http://llm", model="m", token_env="LLM_TOKEN"), tr, sleep=lambda s: None)
    gw = Gateway(r)
    conv = gw.open()
    assert gw.send(conv, "hi") == "hello"
    url, body, headers = tr.calls[-1]
    assert url == "http://llm/v1/chat/completions"
    assert headers["Authorization"] == "Bearer secret"
    assert body == {"messages": [{"role": "user", "content": "hi"}], "model": "m"}


def test_http_responder_sends_history():
    ok = _Resp(200, {"choices": [{"message": {"content": "r"}}]})
    tr = _Transport([ok, ok])
    gw = Gateway(HttpChatResponder(EndpointConfig("http://llm"), tr, sleep=lambda s: None))
    conv = gw.open()
    gw.send(conv, "one")
    gw.send(conv, "two")
    assert [m["content"] for m in tr.calls[-1][1]["messages"]] == ["one", "r", "two"]


def test_http_responder_gives_up():
    tr = _Transport([_Resp(500)] * 3)
    r = HttpChatResponder(EndpointConfig("http://llm"), tr, sleep=lambda s: None)
    with pytest.raises(EndpointFailure):
        Gateway(r).send(Gateway(r).open(), "x")


def test_http_client_error_is_not_retried():
    tr = _Transport([_Resp(400, "bad")])
    r = HttpChatResponder(EndpointConfig("http://llm"), tr, sleep=lambda s: None)
    with pytest.raises(EndpointFailure):
        r(Gateway(r).open(), "x")
    assert len(tr.calls) == 1


def test_token_never_in_config():
    with pytest.raises(ValueError):
        EndpointConfig.from_dict({"base_url": "http://x", "token": "abc"})
