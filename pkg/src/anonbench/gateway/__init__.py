from .core import (
    AuthError,
    CassetteStore,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    GatewayError,
    GatewayMode,
    LlmGateway,
    MalformedResponseError,
    MissingCassetteError,
    ProviderProfile,
    RateLimitError,
    RetryPolicy,
    cassette_key,
)
from .providers import default_providers

__all__ = [
    "AuthError",
    "CassetteStore",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "GatewayError",
    "GatewayMode",
    "LlmGateway",
    "MalformedResponseError",
    "MissingCassetteError",
    "ProviderProfile",
    "RateLimitError",
    "RetryPolicy",
    "cassette_key",
    "default_providers",
]
