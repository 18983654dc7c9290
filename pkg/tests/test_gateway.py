import pytest

from anonbench.backbones import parse_backbone
from anonbench.gateway import (
    CassetteStore,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    GatewayError,
    LlmGateway,
    MissingCassetteError,
    ProviderProfile,
    RateLimitError,
    RetryPolicy,
    cassette_key,
    default_providers,
)


def request(**overrides) -> ChatRequest:
    fields = dict(
        provider_tag="openai",
        model_tag="gpt-4o-mini",
        messages=(ChatMessage("user", "hello"),),
        temperature=0.1,
    )
    fields.update(overrides)
    return ChatRequest(**fields)


class TestChatRequest:
    def test_rejects_empty_messages(self):
        with pytest.raises(ValueError):
            request(messages=())

    def test_rejects_unknown_role(self):
        with pytest.raises(ValueError):
            request(messages=(ChatMessage("assistant", "hi"),))

    def test_rejects_bad_sampling_params(self):
        with pytest.raises(ValueError):
            request(temperature=-0.1)
        with pytest.raises(ValueError):
            request(top_p=0.0)
        with pytest.raises(ValueError):
            request(max_output=0)


class TestCassetteKey:
    def test_stable_across_equal_requests(self):
        assert cassette_key(request()) == cassette_key(request())

    def test_sensitive_to_every_keyed_field(self):
        base = cassette_key(request())
        assert cassette_key(request(temperature=0.2)) != base
        assert cassette_key(request(model_tag="other")) != base
        assert cassette_key(request(top_p=0.9)) != base
        assert (
            cassette_key(request(messages=(ChatMessage("user", "bye"),))) != base
        )


class TestCassetteStore:
    def test_put_get_identity(self, tmp_path):
        store = CassetteStore(tmp_path)
        req = request()
        resp = ChatResponse(content="stored", input_tokens=3, output_tokens=2)
        key = cassette_key(req)
        store.put(key, req, resp)
        assert key in store
        assert store.get(key) == resp

    def test_missing_key_names_request(self, tmp_path):
        store = CassetteStore(tmp_path)
        with pytest.raises(MissingCassetteError) as err:
            store.get("deadbeef")
        assert "deadbeef" in str(err.value)


class TestGatewayModes:
    def test_replay_reads_only_from_store(self, tmp_path):
        store = CassetteStore(tmp_path)
        req = request()
        store.put(cassette_key(req), req, ChatResponse(content="canned"))
        gateway = LlmGateway(store, mode="replay")
        assert gateway.complete(req).content == "canned"

    def test_replay_missing_cassette_raises_with_key(self, tmp_path):
        gateway = LlmGateway(CassetteStore(tmp_path), mode="replay")
        req = request()
        with pytest.raises(MissingCassetteError) as err:
            gateway.complete(req)
        assert cassette_key(req) in str(err.value)

    def test_record_persists_then_skips_live_call(self, tmp_path):
        calls = []

        def transport(req):
            calls.append(req)
            return ChatResponse(content="live")

        gateway = LlmGateway(
            CassetteStore(tmp_path),
            mode="record",
            providers={"openai": ProviderProfile(transport=transport)},
        )
        req = request()
        assert gateway.complete(req).content == "live"
        assert gateway.complete(req).content == "live"
        assert len(calls) == 1  # second call answered from the cassette

    def test_live_mode_never_writes_cassettes(self, tmp_path):
        store = CassetteStore(tmp_path)
        gateway = LlmGateway(
            store,
            mode="live",
            providers={
                "openai": ProviderProfile(transport=lambda r: ChatResponse(content="x"))
            },
        )
        gateway.complete(request())
        assert store.keys() == []

    def test_unknown_provider_rejected(self, tmp_path):
        gateway = LlmGateway(CassetteStore(tmp_path), mode="live", providers={})
        with pytest.raises(GatewayError, match="provider"):
            gateway.complete(request())


class TestRetry:
    def test_backoff_delays_capped(self):
        policy = RetryPolicy(attempts=6, backoff_base=1.0, backoff_cap=30.0)
        assert [policy.delay(i) for i in range(6)] == [1, 2, 4, 8, 16, 30]

    def test_rate_limit_retried_then_succeeds(self, tmp_path):
        attempts = []
        sleeps = []

        def flaky(req):
            attempts.append(1)
            if len(attempts) < 3:
                raise RateLimitError("429")
            return ChatResponse(content="ok")

        gateway = LlmGateway(
            CassetteStore(tmp_path),
            mode="live",
            providers={"openai": ProviderProfile(transport=flaky)},
            sleep=sleeps.append,
        )
        assert gateway.complete(request()).content == "ok"
        assert len(attempts) == 3
        assert sleeps == [1.0, 2.0]

    def test_exhausted_retries_raise(self, tmp_path):
        def always_429(req):
            raise RateLimitError("429")

        gateway = LlmGateway(
            CassetteStore(tmp_path),
            mode="live",
            providers={"openai": ProviderProfile(transport=always_429)},
            sleep=lambda _: None,
        )
        with pytest.raises(RateLimitError):
            gateway.complete(request())


class TestTemperatureCap:
    def test_anthropic_temperature_capped_and_keyed(self, tmp_path):
        seen = []

        def transport(req):
            seen.append(req)
            return ChatResponse(content="ok")

        providers = default_providers()
        providers["anthropic"] = ProviderProfile(
            transport=transport, max_temperature=1.0
        )
        gateway = LlmGateway(CassetteStore(tmp_path), mode="record", providers=providers)
        req = request(provider_tag="anthropic", temperature=1.5)
        gateway.complete(req)
        assert seen[0].temperature == 1.0
        # The cassette is addressed by the effective (capped) request.
        assert cassette_key(gateway.effective_request(req)) in gateway.cassettes
        assert cassette_key(req) not in gateway.cassettes

    def test_cap_not_applied_below_limit(self, tmp_path):
        gateway = LlmGateway(
            CassetteStore(tmp_path), mode="replay", providers=default_providers()
        )
        req = request(provider_tag="anthropic", temperature=0.4)
        assert gateway.effective_request(req) == req


class TestBackboneTags:
    def test_explicit_provider(self):
        assert parse_backbone("anthropic:claude-x") == ("anthropic", "claude-x")

    def test_bare_tag_defaults_to_openai(self):
        assert parse_backbone("gpt-4o-mini") == ("openai", "gpt-4o-mini")
