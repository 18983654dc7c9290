"""Provider-agnostic chat completion with persistent record/replay.

Every LLM-dependent stage goes through :class:`LlmGateway`.  In ``replay``
mode a run is a pure function of its inputs and the cassette store, which
is what makes the whole pipeline testable offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Union


class GatewayError(RuntimeError):
    pass


class MissingCassetteError(GatewayError):
    def __init__(self, key: str):
        super().__init__(f"no cassette entry for request key {key}")
        self.key = key


class AuthError(GatewayError):
    pass


class RateLimitError(GatewayError):
    pass


class MalformedResponseError(GatewayError):
    pass


class GatewayMode(str, Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


@dataclass(frozen=True)
class ChatMessage:
    role: str  # "system" or "user"
    content: str


@dataclass(frozen=True)
class ChatRequest:
    provider_tag: str
    model_tag: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    top_p: float = 1.0
    max_output: int = 4096

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError(f"first message role {self.messages[0].role!r} invalid")
        for msg in self.messages:
            if msg.role not in ("system", "user"):
                raise ValueError(f"unsupported message role {msg.role!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_output <= 0:
            raise ValueError("max_output must be positive")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str = "stop"
    input_tokens: int = 0
    output_tokens: int = 0

    @property
    def truncated(self) -> bool:
        return self.finish_reason == "length"


def cassette_key(req: ChatRequest) -> str:
    """Stable digest over the request fields that determine the response.

    Canonical JSON serialization makes the key independent of any on-disk
    field ordering; any change to provider, model, sampling parameters or
    message content changes the key.
    """
    canonical = json.dumps(
        {
            "provider_tag": req.provider_tag,
            "model_tag": req.model_tag,
            "temperature": req.temperature,
            "top_p": req.top_p,
            "messages": [
                {"role": m.role, "content": m.content} for m in req.messages
            ],
        },
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class CassetteStore:
    """Content-addressed request/response records, one JSON file per key.

    Reads are lock-free; writes are serialized per process and land via
    atomic rename so concurrent writers of the same key are safe.
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self._write_lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def __contains__(self, key: str) -> bool:
        return self._path(key).is_file()

    def get(self, key: str) -> ChatResponse:
        path = self._path(key)
        if not path.is_file():
            raise MissingCassetteError(key)
        obj = json.loads(path.read_text(encoding="utf-8"))
        resp = obj["response"]
        return ChatResponse(
            content=resp["content"],
            finish_reason=resp.get("finish_reason", "stop"),
            input_tokens=resp.get("input_tokens", 0),
            output_tokens=resp.get("output_tokens", 0),
        )

    def put(self, key: str, req: ChatRequest, resp: ChatResponse) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        obj = {
            "key": key,
            "request": {
                "provider_tag": req.provider_tag,
                "model_tag": req.model_tag,
                "temperature": req.temperature,
                "top_p": req.top_p,
                "max_output": req.max_output,
                "messages": [
                    {"role": m.role, "content": m.content} for m in req.messages
                ],
            },
            "response": {
                "content": resp.content,
                "finish_reason": resp.finish_reason,
                "input_tokens": resp.input_tokens,
                "output_tokens": resp.output_tokens,
            },
        }
        path = self._path(key)
        tmp = path.with_suffix(f".tmp-{os.getpid()}-{threading.get_ident()}")
        with self._write_lock:
            tmp.write_text(
                json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True),
                encoding="utf-8",
            )
            tmp.replace(path)

    def keys(self) -> list[str]:
        if not self.directory.is_dir():
            return []
        return sorted(p.stem for p in self.directory.glob("*.json"))


# A transport performs one live provider call for an already-capped request.
Transport = Callable[[ChatRequest], ChatResponse]


@dataclass
class ProviderProfile:
    transport: Transport
    # Providers that reject high sampling temperatures get a cap; the
    # effective value is what enters the cassette key.
    max_temperature: Optional[float] = None


@dataclass
class RetryPolicy:
    attempts: int = 3
    backoff_base: float = 1.0
    backoff_cap: float = 30.0

    def delay(self, attempt: int) -> float:
        return min(self.backoff_base * (2**attempt), self.backoff_cap)


class LlmGateway:
    """Chat-completion front end with live / record / replay modes."""

    def __init__(
        self,
        cassettes: CassetteStore,
        mode: Union[GatewayMode, str] = GatewayMode.REPLAY,
        providers: Optional[dict[str, ProviderProfile]] = None,
        retry: Optional[RetryPolicy] = None,
        sleep: Callable[[float], None] = time.sleep,
        max_parallel: int = 4,
    ):
        self.cassettes = cassettes
        self.mode = GatewayMode(mode)
        self.providers = providers if providers is not None else {}
        self.retry = retry or RetryPolicy()
        self._sleep = sleep
        self._fanout = threading.Semaphore(max_parallel)

    def effective_request(self, req: ChatRequest) -> ChatRequest:
        """Apply the provider temperature cap, if any."""
        profile = self.providers.get(req.provider_tag)
        if profile is None or profile.max_temperature is None:
            return req
        if req.temperature <= profile.max_temperature:
            return req
        return ChatRequest(
            provider_tag=req.provider_tag,
            model_tag=req.model_tag,
            messages=req.messages,
            temperature=profile.max_temperature,
            top_p=req.top_p,
            max_output=req.max_output,
        )

    def complete(self, req: ChatRequest) -> ChatResponse:
        effective = self.effective_request(req)
        key = cassette_key(effective)
        if self.mode is GatewayMode.REPLAY:
            return self.cassettes.get(key)
        if self.mode is GatewayMode.RECORD and key in self.cassettes:
            return self.cassettes.get(key)
        resp = self._call_live(effective)
        if self.mode is GatewayMode.RECORD:
            self.cassettes.put(key, effective, resp)
        return resp

    def _call_live(self, req: ChatRequest) -> ChatResponse:
        profile = self.providers.get(req.provider_tag)
        if profile is None:
            raise GatewayError(
                f"no provider configured for tag {req.provider_tag!r}"
            )
        last_error: Optional[Exception] = None
        with self._fanout:
            for attempt in range(self.retry.attempts):
                try:
                    return profile.transport(req)
                except RateLimitError as exc:
                    last_error = exc
                    if attempt + 1 < self.retry.attempts:
                        self._sleep(self.retry.delay(attempt))
        assert last_error is not None
        raise last_error
