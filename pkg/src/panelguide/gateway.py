"""Chat-completion gateway: one prompt in, one raw reply out.

Two backends share the interface: a live HTTP client for any endpoint with
the standard chat-completions shape, and a scripted backend that replays
fixture replies with zero network for deterministic tests. Replies are
returned verbatim, untrimmed; parsing happens downstream.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import GatewayError

DEFAULT_MODEL = "gpt-4"

LIVE = "live"
SCRIPTED = "scripted"


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    timeout_s: float = 60.0
    # Scripted backends look replies up by fixture id when present, else by
    # a hash of the prompt text.
    fixture_id: str | None = None


@dataclass(frozen=True)
class CompletionResult:
    text: str
    latency_s: float
    backend: str


def prompt_key(prompt: str) -> str:
    """Stable lookup key for a prompt: first 16 hex chars of its SHA-256."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


class ScriptedBackend:
    """Deterministic reply table backed by a fixture directory.

    A fixture ``<id>`` is answered from ``<id>.reply.txt``; prompts without a
    fixture id fall back to ``<prompt_key>.reply.txt``. ``latency_s`` injects
    an artificial wait so downstream AWAITING states are observable.
    """

    kind = SCRIPTED

    def __init__(self, fixtures_dir: str | Path, latency_s: float = 0.0):
        self.fixtures_dir = Path(fixtures_dir)
        self.latency_s = latency_s

    def complete(self, req: CompletionRequest) -> str:
        if self.latency_s > 0:
            time.sleep(self.latency_s)
        for key in (req.fixture_id, prompt_key(req.prompt)):
            if key is None:
                continue
            path = self.fixtures_dir / f"{key}.reply.txt"
            if path.exists():
                return path.read_text(encoding="utf-8")
        raise GatewayError(
            f"no scripted reply for fixture {req.fixture_id!r} (prompt key {prompt_key(req.prompt)})",
            reason="scripted-miss",
        )


class LiveBackend:
    """HTTP client for a chat-completions endpoint.

    The prompt travels as a single user message. Connection-level failures
    and 5xx responses are retried up to ``max_retries`` times with
    exponential backoff; auth failures and timeouts are terminal.
    """

    kind = LIVE

    def __init__(
        self,
        base_url: str,
        api_key: str,
        max_retries: int = 2,
        backoff_base_s: float = 0.5,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.max_retries = max_retries
        self.backoff_base_s = backoff_base_s
        self._http = session or requests.Session()

    @classmethod
    def from_env(cls) -> "LiveBackend":
        base = os.environ.get("LLM_BASE_URL", "")
        key = os.environ.get("LLM_API_KEY", "")
        if not base or not key:
            raise GatewayError("LLM_BASE_URL and LLM_API_KEY must be set for the live backend", reason="config")
        return cls(base, key)

    def complete(self, req: CompletionRequest) -> str:
        url = f"{self.base_url}/chat/completions"
        body = {
            "model": req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_exc: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_base_s * (2 ** (attempt - 1)))
            try:
                resp = self._http.post(url, json=body, headers=headers, timeout=req.timeout_s)
            except requests.Timeout as exc:
                raise GatewayError(f"completion timed out after {req.timeout_s}s", reason="timeout") from exc
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code in (401, 403):
                raise GatewayError(f"authentication rejected (HTTP {resp.status_code})", reason="auth")
            if resp.status_code >= 500:
                last_exc = GatewayError(f"server error HTTP {resp.status_code}", reason="transport")
                continue
            if resp.status_code >= 400:
                raise GatewayError(f"request rejected (HTTP {resp.status_code})", reason="transport")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise GatewayError(f"malformed response envelope: {exc}", reason="bad-envelope") from exc
        raise GatewayError(f"transport failed after {self.max_retries + 1} attempts: {last_exc}", reason="transport")


def complete(req: CompletionRequest, backend) -> CompletionResult:
    """Run one completion and measure wall-clock latency."""
    t0 = time.monotonic()
    text = backend.complete(req)
    return CompletionResult(text=text, latency_s=time.monotonic() - t0, backend=backend.kind)
