"""Backbone tag handling and the single shared completion helper.

A backbone tag is ``provider:model`` (for example ``openai:gpt-4.1`` or
``anthropic:claude-sonnet``); a bare tag defaults to the openai provider.
"""

from __future__ import annotations

from typing import Optional

from .gateway import ChatMessage, ChatRequest, ChatResponse, LlmGateway

DEFAULT_MAX_OUTPUT = 8192


def parse_backbone(backbone: str) -> tuple[str, str]:
    if ":" in backbone:
        provider, model = backbone.split(":", 1)
        return provider, model
    return "openai", backbone


def complete_text(
    gateway: LlmGateway,
    backbone: str,
    user_prompt: str,
    temperature: float,
    top_p: float = 1.0,
    system_prompt: Optional[str] = None,
    max_output: int = DEFAULT_MAX_OUTPUT,
) -> tuple[str, ChatRequest, ChatResponse]:
    """One completion through the gateway.

    Returns the content, the effective request (after provider caps) and the
    full response so callers can log truncation.
    """
    provider, model = parse_backbone(backbone)
    messages = []
    if system_prompt is not None:
        messages.append(ChatMessage(role="system", content=system_prompt))
    messages.append(ChatMessage(role="user", content=user_prompt))
    req = ChatRequest(
        provider_tag=provider,
        model_tag=model,
        messages=tuple(messages),
        temperature=temperature,
        top_p=top_p,
        max_output=max_output,
    )
    effective = gateway.effective_request(req)
    resp = gateway.complete(req)
    return resp.content, effective, resp
