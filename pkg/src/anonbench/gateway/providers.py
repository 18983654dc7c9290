"""Live provider transports.

Credentials come from environment variables named after the provider tag
(``OPENAI_API_KEY``, ``ANTHROPIC_API_KEY``, or ``<TAG>_API_KEY`` for custom
tags).  Request/response logging redacts keys.
"""

from __future__ import annotations

import logging
import os
from typing import Optional

import httpx

from .core import (
    AuthError,
    ChatRequest,
    ChatResponse,
    GatewayError,
    MalformedResponseError,
    ProviderProfile,
    RateLimitError,
)

log = logging.getLogger(__name__)

OPENAI_BASE_URL = "https://api.openai.com/v1"
ANTHROPIC_BASE_URL = "https://api.anthropic.com/v1"


def _api_key(provider_tag: str) -> str:
    env = f"{provider_tag.upper()}_API_KEY"
    key = os.environ.get(env)
    if not key:
        raise AuthError(f"missing credential: set {env}")
    return key


def _raise_for_status(resp: httpx.Response, provider: str) -> None:
    if resp.status_code == 429:
        raise RateLimitError(f"{provider}: rate limited")
    if resp.status_code in (401, 403):
        raise AuthError(f"{provider}: authentication failed ({resp.status_code})")
    if resp.status_code >= 400:
        raise GatewayError(f"{provider}: HTTP {resp.status_code}")


def openai_transport(req: ChatRequest, base_url: Optional[str] = None) -> ChatResponse:
    """OpenAI-compatible chat completions endpoint."""
    key = _api_key(req.provider_tag)
    url = (base_url or os.environ.get("OPENAI_BASE_URL") or OPENAI_BASE_URL).rstrip("/")
    payload = {
        "model": req.model_tag,
        "messages": [{"role": m.role, "content": m.content} for m in req.messages],
        "temperature": req.temperature,
        "top_p": req.top_p,
        "max_tokens": req.max_output,
    }
    log.debug("openai request model=%s messages=%d", req.model_tag, len(req.messages))
    resp = httpx.post(
        f"{url}/chat/completions",
        json=payload,
        headers={"Authorization": f"Bearer {key}"},
        timeout=120.0,
    )
    _raise_for_status(resp, "openai")
    try:
        obj = resp.json()
        choice = obj["choices"][0]
        usage = obj.get("usage", {})
        return ChatResponse(
            content=choice["message"]["content"],
            finish_reason=choice.get("finish_reason", "stop"),
            input_tokens=usage.get("prompt_tokens", 0),
            output_tokens=usage.get("completion_tokens", 0),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise MalformedResponseError(f"openai: unexpected response shape: {exc}") from exc


def anthropic_transport(
    req: ChatRequest, base_url: Optional[str] = None
) -> ChatResponse:
    key = _api_key(req.provider_tag)
    url = (base_url or os.environ.get("ANTHROPIC_BASE_URL") or ANTHROPIC_BASE_URL).rstrip("/")
    system = None
    messages = []
    for m in req.messages:
        if m.role == "system" and system is None and not messages:
            system = m.content
        else:
            messages.append({"role": "user", "content": m.content})
    payload: dict = {
        "model": req.model_tag,
        "messages": messages,
        "temperature": req.temperature,
        "top_p": req.top_p,
        "max_tokens": req.max_output,
    }
    if system is not None:
        payload["system"] = system
    log.debug("anthropic request model=%s messages=%d", req.model_tag, len(messages))
    resp = httpx.post(
        f"{url}/messages",
        json=payload,
        headers={"x-api-key": key, "anthropic-version": "2023-06-01"},
        timeout=120.0,
    )
    _raise_for_status(resp, "anthropic")
    try:
        obj = resp.json()
        content = "".join(
            block["text"] for block in obj["content"] if block.get("type") == "text"
        )
        usage = obj.get("usage", {})
        stop = obj.get("stop_reason", "end_turn")
        return ChatResponse(
            content=content,
            finish_reason="length" if stop == "max_tokens" else "stop",
            input_tokens=usage.get("input_tokens", 0),
            output_tokens=usage.get("output_tokens", 0),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise MalformedResponseError(
            f"anthropic: unexpected response shape: {exc}"
        ) from exc


def default_providers() -> dict[str, ProviderProfile]:
    """Built-in provider registry.

    The Anthropic API rejects temperatures above 1.0, so requests get
    capped there and the effective value enters the cassette key.
    """
    return {
        "openai": ProviderProfile(transport=openai_transport),
        "anthropic": ProviderProfile(
            transport=anthropic_transport, max_temperature=1.0
        ),
    }
