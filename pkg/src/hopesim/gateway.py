"""Pluggable chat-completion backends with retry, logging, and token accounting.

Three backends share one interface: a deterministic scripted stub for tests
and replayable acceptance runs, an HTTP client for live runs against any
chat-completion-shaped provider, and a replay backend that re-serves the
responses captured in a previous run's gateway log.
"""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

import requests


class GatewayError(Exception):
    pass


class MissingScriptKey(GatewayError):
    """The script book has no entry for a (tag, phase, attempt) triple."""

    def __init__(self, tag: str, phase: object, attempt: int):
        self.tag, self.phase, self.attempt = tag, phase, attempt
        super().__init__(f"no scripted response for {tag}/{phase}/{attempt}")


class RemoteError(GatewayError):
    """A failed remote call; ``transient`` marks retry-worthy failures."""

    def __init__(self, message: str, status: int | None = None, transient: bool = False):
        self.status = status
        self.transient = transient
        super().__init__(message)


class Exhausted(GatewayError):
    """Retries used up; carries the last underlying error."""

    def __init__(self, last_error: Exception, attempts: int):
        self.last_error = last_error
        self.attempts = attempts
        super().__init__(f"gave up after {attempts} attempts: {last_error}")


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    text: str


@dataclass(frozen=True)
class ChatRequest:
    """One completion request; ``tag``/``phase``/``attempt`` key scripted runs."""

    system: str
    messages: tuple[ChatMessage, ...]
    tag: str
    phase: int | str = 0
    attempt: int = 1
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("message list must be non-empty")

    def with_attempt(self, attempt: int) -> "ChatRequest":
        return ChatRequest(
            system=self.system,
            messages=self.messages,
            tag=self.tag,
            phase=self.phase,
            attempt=attempt,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
        )


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int
    completion_tokens: int


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff: float = 0.0  # seconds; doubles per retry

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> tuple[str, Usage]: ...


def _estimate_tokens(text: str) -> int:
    return max(1, math.ceil(len(text) / 4))


def _request_chars(request: ChatRequest) -> int:
    return len(request.system) + sum(len(m.text) for m in request.messages)


class UsageLedger:
    """Cumulative prompt/completion tokens and call counts per caller tag."""

    def __init__(self) -> None:
        self._by_tag: dict[str, dict[str, int]] = {}

    def record(self, tag: str, usage: Usage) -> None:
        slot = self._by_tag.setdefault(
            tag, {"prompt_tokens": 0, "completion_tokens": 0, "calls": 0}
        )
        slot["prompt_tokens"] += usage.prompt_tokens
        slot["completion_tokens"] += usage.completion_tokens
        slot["calls"] += 1

    def totals(self) -> dict[str, int]:
        out = {"prompt_tokens": 0, "completion_tokens": 0, "calls": 0}
        for slot in self._by_tag.values():
            for k in out:
                out[k] += slot[k]
        return out

    def snapshot(self) -> dict[str, dict[str, int]]:
        return {tag: dict(slot) for tag, slot in sorted(self._by_tag.items())}


def script_key(tag: str, phase: int | str, attempt: int) -> str:
    return f"{tag}/{phase}/{attempt}"


class ScriptBook:
    """Exact-match map from ``tag/phase/attempt`` to a canned response.

    Values are either plain response text or ``{"error": msg, "transient": bool}``
    entries that make the stub raise, so flaky sequences can be scripted.
    Missing keys are always errors, never silent defaults.
    """

    def __init__(self, entries: dict[str, object] | None = None):
        self.entries: dict[str, object] = dict(entries or {})

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptBook":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"script book {path} must be a JSON object")
        return cls(data)

    def add(self, tag: str, phase: int | str, attempt: int, response: object) -> None:
        self.entries[script_key(tag, phase, attempt)] = response

    def lookup(self, request: ChatRequest) -> str:
        key = script_key(request.tag, request.phase, request.attempt)
        if key not in self.entries:
            raise MissingScriptKey(request.tag, request.phase, request.attempt)
        entry = self.entries[key]
        if isinstance(entry, dict) and "error" in entry:
            raise RemoteError(
                str(entry["error"]),
                status=entry.get("status"),
                transient=bool(entry.get("transient", True)),
            )
        return str(entry)


class ScriptedBackend:
    """Deterministic stub: byte-identical canned responses, estimated usage."""

    def __init__(self, book: ScriptBook):
        self.book = book

    def complete(self, request: ChatRequest) -> tuple[str, Usage]:
        text = self.book.lookup(request)
        usage = Usage(
            prompt_tokens=_estimate_tokens("x" * _request_chars(request)),
            completion_tokens=_estimate_tokens(text),
        )
        return text, usage


ENV_BASE_URL = "HOPESIM_API_BASE"
ENV_API_KEY = "HOPESIM_API_KEY"
ENV_MODEL = "HOPESIM_MODEL"


class RemoteBackend:
    """Minimal chat-completions HTTP client; provider choice is configuration."""

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout: float = 60.0,
    ):
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, "")).rstrip("/")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        self.model = model or os.environ.get(ENV_MODEL, "")
        self.timeout = timeout
        if not self.base_url:
            raise ValueError(f"remote backend needs a base URL ({ENV_BASE_URL})")
        if not self.model:
            raise ValueError(f"remote backend needs a model id ({ENV_MODEL})")

    def complete(self, request: ChatRequest) -> tuple[str, Usage]:
        payload = {
            "model": self.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [{"role": "system", "content": request.system}]
            + [{"role": m.role, "content": m.text} for m in request.messages],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=self.timeout,
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise RemoteError(f"transport failure: {exc}", transient=True) from exc
        if resp.status_code != 200:
            transient = resp.status_code == 429 or resp.status_code >= 500
            raise RemoteError(
                f"status {resp.status_code}: {resp.text[:200]}",
                status=resp.status_code,
                transient=transient,
            )
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise RemoteError(f"malformed response body: {exc}") from exc
        usage = body.get("usage") or {}
        return text, Usage(
            prompt_tokens=int(usage.get("prompt_tokens", _estimate_tokens("x" * _request_chars(request)))),
            completion_tokens=int(usage.get("completion_tokens", _estimate_tokens(text))),
        )


class ReplayBackend:
    """Serves responses recorded in a gateway log; errors name the missing call."""

    def __init__(self, entries: dict[str, dict]):
        self.entries = entries

    @classmethod
    def from_log(cls, path: str | Path) -> "ReplayBackend":
        entries: dict[str, dict] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                key = script_key(record["tag"], record["phase"], record["attempt"])
                entries[key] = record
        return cls(entries)

    def complete(self, request: ChatRequest) -> tuple[str, Usage]:
        key = script_key(request.tag, request.phase, request.attempt)
        record = self.entries.get(key)
        if record is None:
            raise MissingScriptKey(request.tag, request.phase, request.attempt)
        if record["status"] != "ok":
            raise RemoteError(record.get("error", "replayed failure"), transient=bool(record.get("transient")))
        return record["response"], Usage(
            prompt_tokens=int(record.get("prompt_tokens", 1)),
            completion_tokens=int(record.get("completion_tokens", 1)),
        )


class Gateway:
    """Accounting wrapper: every call lands in the ledger and the gateway log."""

    def __init__(self, backend: Backend, ledger: UsageLedger | None = None):
        self.backend = backend
        self.ledger = ledger if ledger is not None else UsageLedger()
        self.log: list[dict] = []
        self._log_path: Path | None = None

    def attach_log_file(self, path: str | Path | None) -> None:
        self._log_path = Path(path) if path else None

    def _write(self, record: dict) -> None:
        self.log.append(record)
        if self._log_path is not None:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")

    def complete(self, request: ChatRequest) -> tuple[str, Usage]:
        base = {"tag": request.tag, "phase": request.phase, "attempt": request.attempt}
        try:
            text, usage = self.backend.complete(request)
        except GatewayError as exc:
            self._write(
                base
                | {
                    "status": "error",
                    "error": str(exc),
                    "transient": bool(getattr(exc, "transient", False)),
                }
            )
            raise
        self.ledger.record(request.tag, usage)
        self._write(
            base
            | {
                "status": "ok",
                "response": text,
                "prompt_tokens": usage.prompt_tokens,
                "completion_tokens": usage.completion_tokens,
            }
        )
        return text, usage

    def complete_with_retry(
        self, request: ChatRequest, policy: RetryPolicy | None = None
    ) -> tuple[str, Usage, int]:
        """Retry transient failures only; returns (text, usage, attempts used).

        Attempt numbers continue from ``request.attempt`` so scripted books can
        stage flaky sequences.
        """
        policy = policy or RetryPolicy()
        last_error: Exception | None = None
        for i in range(policy.max_attempts):
            attempt = request.attempt + i
            try:
                text, usage = self.complete(request.with_attempt(attempt))
                return text, usage, i + 1
            except MissingScriptKey:
                raise
            except GatewayError as exc:
                last_error = exc
                if not getattr(exc, "transient", False):
                    raise
                if i + 1 < policy.max_attempts and policy.backoff > 0:
                    time.sleep(policy.backoff * (2**i))
        assert last_error is not None
        raise Exhausted(last_error, policy.max_attempts)
