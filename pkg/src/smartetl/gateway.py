"""Chat-LLM access with per-conversation budgets and record/replay.

A :class:`Gateway` owns conversations and enforces the character budget
per prompt and the prompt cap per conversation. What actually answers a
prompt is a *responder*: any callable ``responder(conversation, text) -> str``.
Three are provided:

* :class:`HttpChatResponder` -- JSON-over-HTTP chat endpoint with retries;
* :class:`MockResponder` -- first matching regex rule wins;
* :class:`ReplayResponder` -- plays back a recorded :class:`Transcript`.

Passing ``transcript=`` to the gateway records every exchange.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import requests

from .errors import (
    CharBudgetExceeded,
    EndpointFailure,
    PromptCapExceeded,
    ReplayMismatch,
)

log = logging.getLogger(__name__)

DEFAULT_CHAR_BUDGET = 15_000
DEFAULT_PROMPT_CAP = 10
NO_RULE_MATCHED = "<<NO MOCK RULE MATCHED>>"


def prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class Conversation:
    id: str
    char_budget: int | None = DEFAULT_CHAR_BUDGET
    prompt_cap: int | None = DEFAULT_PROMPT_CAP
    messages: list = field(default_factory=list)  # (role, text)
    prompt_count: int = 0

    @property
    def prompts(self) -> list[str]:
        return [t for r, t in self.messages if r == "user"]


@dataclass
class TranscriptEntry:
    conversation: str
    seq: int
    prompt_sha256: str
    prompt: str
    response: str


class Transcript:
    """Append-only log of (prompt hash, prompt, response) triples."""

    def __init__(self, endpoint: str = "", timestamp: str | None = None, entries=None):
        self.endpoint = endpoint
        self.timestamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.entries: list[TranscriptEntry] = list(entries or [])
        self._lock = threading.Lock()

    def append(self, conversation: str, prompt: str, response: str) -> None:
        with self._lock:
            self.entries.append(TranscriptEntry(
                conversation, len(self.entries), prompt_hash(prompt), prompt, response))

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({"endpoint": self.endpoint, "timestamp": self.timestamp},
                                ensure_ascii=False) + "\n")
            for e in self.entries:
                fh.write(json.dumps(e.__dict__, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path) -> "Transcript":
        with open(path, encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        header = lines[0] if lines and "prompt" not in lines[0] else {}
        body = lines[1:] if header else lines
        return cls(header.get("endpoint", ""), header.get("timestamp"),
                   [TranscriptEntry(**d) for d in body])

    def __len__(self):
        return len(self.entries)


class Gateway:
    def __init__(self, responder, *, char_budget: int | None = DEFAULT_CHAR_BUDGET,
                 prompt_cap: int | None = DEFAULT_PROMPT_CAP, transcript: Transcript | None = None,
                 label: str = ""):
        self.responder = responder
        self.char_budget = char_budget
        self.prompt_cap = prompt_cap
        self.transcript = transcript
        self.label = label
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self.sent: list[tuple[str, str]] = []  # (conversation id, prompt) audit trail

    def open(self, *, char_budget: int | None | str = "default",
             prompt_cap: int | None | str = "default") -> Conversation:
        with self._lock:
            cid = f"c{next(self._ids):04d}"
        return Conversation(
            cid,
            self.char_budget if char_budget == "default" else char_budget,
            self.prompt_cap if prompt_cap == "default" else prompt_cap,
        )

    def send(self, conv: Conversation, text: str) -> str:
        return send_prompt(conv, text, self)


def send_prompt(conv: Conversation, text: str, gateway: Gateway) -> str:
    if conv.char_budget is not None and len(text) > conv.char_budget:
        raise CharBudgetExceeded(f"prompt of {len(text)} chars exceeds budget {conv.char_budget}")
    if conv.prompt_cap is not None and conv.prompt_count >= conv.prompt_cap:
        raise PromptCapExceeded(f"conversation {conv.id} already carries {conv.prompt_count} prompts")
    response = gateway.responder(conv, text)
    conv.messages.append(("user", text))
    conv.messages.append(("assistant", response))
    conv.prompt_count += 1
    with gateway._lock:
        gateway.sent.append((conv.id, text))
    if gateway.transcript is not None:
        gateway.transcript.append(conv.id, text, response)
    return response


# ---------------------------------------------------------------- responders

class MockResponder:
    """Deterministic canned replies: the first rule whose regex matches wins.

    A rule response may be a string or a callable ``(prompt) -> str``. When
    no rule matches, ``fallback`` (another responder) answers if given, else
    ``default``, else the :data:`NO_RULE_MATCHED` sentinel.
    """

    def __init__(self, rules=(), default: str | None = None, fallback=None):
        self.rules = [(re.compile(p, re.DOTALL), r) for p, r in rules]
        self.default = default
        self.fallback = fallback
        self.calls = 0

    def __call__(self, conv, text: str) -> str:
        self.calls += 1
        for pattern, response in self.rules:
            if pattern.search(text):
                return response(text) if callable(response) else response
        if self.fallback is not None:
            return self.fallback(conv, text)
        return self.default if self.default is not None else NO_RULE_MATCHED

    @classmethod
    def from_json(cls, obj, fallback=None) -> "MockResponder":
        return cls([(r["pattern"], r["response"]) for r in obj.get("rules", [])], obj.get("default"), fallback)


def mock_responder(rules=(), default: str | None = None, fallback=None) -> MockResponder:
    return MockResponder(rules, default, fallback)


class ReplayResponder:
    """Returns recorded responses by position, checking the prompt hash."""

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self.position = 0
        self._lock = threading.Lock()

    def __call__(self, conv, text: str) -> str:
        with self._lock:
            if self.position >= len(self.transcript.entries):
                raise ReplayMismatch(f"transcript exhausted after {self.position} exchanges")
            entry = self.transcript.entries[self.position]
            if entry.prompt_sha256 != prompt_hash(text):
                raise ReplayMismatch(
                    f"prompt #{self.position} diverges from the recording "
                    f"({prompt_hash(text)[:12]} != {entry.prompt_sha256[:12]})")
            self.position += 1
            return entry.response


@dataclass
class EndpointConfig:
    """A decoder-style chat endpoint. The auth token is read from ``token_env``."""

    base_url: str
    model: str = ""
    path: str = "/v1/chat/completions"
    token_env: str | None = None
    max_attempts: int = 3
    backoff: float = 1.0  # seconds, doubled per retry
    timeout: float = 120.0
    response_path: str = "choices.0.message.content"
    send_history: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "EndpointConfig":
        if "token" in d or "api_key" in d:
            raise ValueError("tokens go in an environment variable named by 'token_env', not in config")
        return cls(**d)


def _dig(obj, path: str):
    for part in path.split("."):
        obj = obj[int(part)] if isinstance(obj, list) else obj[part]
    return obj


class HttpChatResponder:
    def __init__(self, config: EndpointConfig, transport=None, sleep=time.sleep):
        self.config = config
        self.transport = transport or requests.Session()
        self.sleep = sleep

    def _body(self, conv: Conversation, text: str) -> dict:
        messages = []
        if self.config.send_history:
            messages = [{"role": r, "content": t} for r, t in conv.messages]
        messages.append({"role": "user", "content": text})
        body = {"messages": messages}
        if self.config.model:
            body["model"] = self.config.model
        return body

    def __call__(self, conv: Conversation, text: str) -> str:
        cfg = self.config
        headers = {"Content-Type": "application/json"}
        if cfg.token_env:
            token = os.environ.get(cfg.token_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        url = cfg.base_url.rstrip("/") + cfg.path
        last = None
        for attempt in range(cfg.max_attempts):
            if attempt:
                self.sleep(cfg.backoff * 2 ** (attempt - 1))
            try:
                resp = self.transport.post(url, json=self._body(conv, text), headers=headers,
                                           timeout=cfg.timeout)
                if resp.status_code >= 500 or resp.status_code == 429:
                    last = f"HTTP {resp.status_code}"
                    continue
                if resp.status_code >= 400:
                    raise EndpointFailure(f"HTTP {resp.status_code}: {resp.text[:200]}")
                return str(_dig(resp.json(), cfg.response_path))
            except EndpointFailure:
                raise
            except (requests.RequestException, ValueError, KeyError, IndexError) as exc:
                last = repr(exc)
                log.warning("endpoint attempt %d failed: %s", attempt + 1, exc)
        raise EndpointFailure(f"{url}: giving up after {cfg.max_attempts} attempts ({last})")
