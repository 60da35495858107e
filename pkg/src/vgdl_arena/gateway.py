"""Multi-turn dialogue protocol against chat-completions endpoints, plus
scripted agents for testing.

A session is one growing conversation: the system prompt, then alternating
user (observation) / assistant (reply) messages. In copied-reasoning mode the
model's reasoning trace is embedded in its own assistant messages, so it can
re-read its prior reasoning on later turns; in action-only mode assistant
messages carry only the chosen action and no rationale text ever enters a
payload.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field

import requests

from .engine import ACTION_TOKENS, Action
from .errors import (
    GatewayTimeout,
    MalformedHistory,
    NoActionField,
    RateLimited,
    TransportError,
    UnknownActionToken,
    UnparseableReply,
)
from .rng import Rng

COPIED_REASONING = "copied_reasoning"
ACTION_ONLY = "action_only"

API_KEY_ENV = "ARENA_API_KEY"


@dataclass
class DialogueTurn:
    role: str  # "user" | "assistant"
    content: str
    parsed_action: Action | None = None
    rationale: str | None = None


@dataclass
class AgentConfig:
    endpoint: str = "http://localhost:8000/v1"
    model: str = "mock"
    rationale_mode: str = COPIED_REASONING
    suggestion_level: str = "elaborate"
    temperature: float = 1.0
    max_output_tokens: int = 4096
    max_attempts: int = 3
    backoff: tuple[float, ...] = (1.0, 5.0, 15.0)
    timeout: float = 120.0
    # "field": reasoning arrives in message.reasoning / .reasoning_content;
    # "delimited": reasoning is a <think>...</think> block inside content.
    reasoning_source: str = "field"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")


@dataclass
class AgentReply:
    action: Action
    rationale: str | None
    raw: str
    latency: float
    reasoning_chars: int = 0

    def __post_init__(self):
        self.reasoning_chars = len(self.rationale) if self.rationale else 0


def format_assistant_content(action: Action, rationale: str | None, mode: str) -> str:
    """Canonical assistant-message body committed into the dialogue history."""
    if mode == COPIED_REASONING and rationale is not None:
        return json.dumps({"rationale": rationale, "action": action.value})
    return json.dumps({"action": action.value})


def build_context(
    history: list[DialogueTurn], system_prompt: str, new_observation: str
) -> list[dict]:
    """Chat-completions message list: system, full history, new observation."""
    expected = "user"
    for turn in history:
        if turn.role != expected:
            raise MalformedHistory(f"expected {expected} turn, got {turn.role}")
        expected = "assistant" if expected == "user" else "user"
    if expected == "assistant":
        raise MalformedHistory("history ends with an unanswered user turn")
    messages = [{"role": "system", "content": system_prompt}]
    messages += [{"role": t.role, "content": t.content} for t in history]
    messages.append({"role": "user", "content": new_observation})
    return messages


_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)


def parse_action_reply(text: str) -> tuple[Action, str | None]:
    """Extract the first well-formed reply object from raw assistant content.

    Tolerates surrounding prose; the action token matches case-insensitively.
    """
    decoder = json.JSONDecoder()
    found_object = False
    for match in re.finditer(r"\{", text):
        try:
            obj, _ = decoder.raw_decode(text, match.start())
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        found_object = True
        if "action" not in obj:
            continue
        token = str(obj["action"]).lower()
        if token not in ACTION_TOKENS:
            raise UnknownActionToken(f"unknown action token {obj['action']!r}")
        rationale = obj.get("rationale")
        return Action(token), str(rationale) if rationale is not None else None
    if found_object:
        raise NoActionField("no object with an 'action' field in reply")
    raise NoActionField("no structured object found in reply")


def _extract_message(cfg: AgentConfig, response: dict) -> tuple[str, str | None]:
    """Returns (content, reasoning trace or None) from a chat-completions body."""
    try:
        message = response["choices"][0]["message"]
        content = message.get("content") or ""
    except (KeyError, IndexError, TypeError):
        raise UnparseableReply(f"malformed endpoint response: {response!r}")
    reasoning = None
    if cfg.reasoning_source == "field":
        reasoning = message.get("reasoning") or message.get("reasoning_content")
    elif cfg.reasoning_source == "delimited":
        m = _THINK_RE.search(content)
        if m:
            reasoning = m.group(1).strip()
            content = _THINK_RE.sub("", content)
    return content, reasoning


def http_transport(cfg: AgentConfig, payload: dict) -> dict:
    """Default transport: POST to {endpoint}/chat/completions."""
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        resp = requests.post(
            cfg.endpoint.rstrip("/") + "/chat/completions",
            json=payload,
            headers=headers,
            timeout=cfg.timeout,
        )
    except requests.Timeout:
        raise GatewayTimeout(f"request timed out after {cfg.timeout}s")
    except requests.RequestException as exc:
        raise TransportError(str(exc))
    if resp.status_code == 429:
        raise RateLimited("endpoint returned 429")
    if resp.status_code >= 400:
        raise TransportError(f"endpoint returned {resp.status_code}: {resp.text[:500]}")
    return resp.json()


def request_action(cfg: AgentConfig, messages: list[dict], transport=None) -> AgentReply:
    """Send one request, retrying per policy on transport and parse failures."""
    transport = transport or http_transport
    payload = {
        "model": cfg.model,
        "messages": messages,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
        **cfg.extra,
    }
    last_error: Exception | None = None
    for attempt in range(cfg.max_attempts):
        if attempt > 0:
            delay = cfg.backoff[min(attempt - 1, len(cfg.backoff) - 1)]
            time.sleep(delay)
        start = time.monotonic()
        try:
            response = transport(cfg, payload)
            content, reasoning = _extract_message(cfg, response)
            action, inline_rationale = parse_action_reply(content)
        except (TransportError, RateLimited, GatewayTimeout, UnparseableReply,
                NoActionField, UnknownActionToken) as exc:
            last_error = exc
            continue
        rationale = reasoning if reasoning is not None else inline_rationale
        if cfg.rationale_mode == ACTION_ONLY:
            rationale = None
        return AgentReply(
            action=action,
            rationale=rationale,
            raw=json.dumps(response),
            latency=time.monotonic() - start,
        )
    if isinstance(last_error, (NoActionField, UnknownActionToken, UnparseableReply)):
        raise UnparseableReply(f"unparseable after {cfg.max_attempts} attempts: {last_error}")
    raise last_error if last_error else TransportError("no attempts made")


# ----------------------------------------------------------------------
# Agent interface used by the curriculum runner


class Agent:
    """One decision per observation; history management is the runner's job."""

    name = "agent"
    rationale_mode = ACTION_ONLY

    def act(self, system_prompt: str, history: list[DialogueTurn], observation: str) -> AgentReply:
        raise NotImplementedError


class LlmAgent(Agent):
    def __init__(self, cfg: AgentConfig, transport=None):
        self.cfg = cfg
        self.transport = transport
        self.name = cfg.model
        self.rationale_mode = cfg.rationale_mode

    def act(self, system_prompt, history, observation):
        messages = build_context(history, system_prompt, observation)
        return request_action(self.cfg, messages, transport=self.transport)


class ScriptedAgent(Agent):
    """Deterministic map from observation text to action; zero latency."""

    def __init__(self, policy, name: str = "scripted"):
        self.policy = policy
        self.name = name

    def act(self, system_prompt, history, observation):
        return AgentReply(action=self.policy(observation), rationale=None, raw="", latency=0.0)


class SequenceAgent(Agent):
    """Replays a fixed action list, then repeats it from the start."""

    def __init__(self, actions: list[Action], name: str = "sequence"):
        self.actions = list(actions)
        self.index = 0
        self.name = name

    def act(self, system_prompt, history, observation):
        action = self.actions[self.index % len(self.actions)]
        self.index += 1
        return AgentReply(action=action, rationale=None, raw="", latency=0.0)


class RandomAgent(Agent):
    """Seeded uniform-random policy; identical sequence across runs."""

    def __init__(self, seed: int, name: str = "random"):
        self.rng = Rng(seed)
        self.name = f"{name}{seed}"

    def act(self, system_prompt, history, observation):
        action = list(Action)[self.rng.randrange(len(Action))]
        return AgentReply(action=action, rationale=None, raw="", latency=0.0)
