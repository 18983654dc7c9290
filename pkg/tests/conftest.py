import pytest

from anonbench.corpus.agreement import compute_subject_iaa
from anonbench.corpus.loader import load_dataset
from anonbench.gateway import CassetteStore, LlmGateway, ProviderProfile
from anonbench.pipeline import Pipeline, RunConfig
from anonbench.scoring import compare_llm

from scripted import scripted_transport

FIXTURE_DATASET = "tests/data/fixture.jsonl"
JUDGE_PAIRS = [
    ("New York City", "NYC"),
    ("James Smith", "James"),
    ("Boston", "Austin"),
]


def fixture_config(cassette_dir: str, mode: str = "replay", **overrides) -> RunConfig:
    base = dict(
        dataset=FIXTURE_DATASET,
        method="deid_gpt",
        backbone="gpt-4o-mini",
        adversary="gpt-4o-mini",
        judge="gpt-4o-mini",
        mode=mode,
        cassette_dir=cassette_dir,
    )
    base.update(overrides)
    return RunConfig(**base)


def scripted_gateway(cassette_dir: str, mode: str) -> LlmGateway:
    return LlmGateway(
        CassetteStore(cassette_dir),
        mode=mode,
        providers={"openai": ProviderProfile(transport=scripted_transport)},
    )


@pytest.fixture(scope="session")
def cassette_dir(tmp_path_factory) -> str:
    """Record every cassette the replay tests need, without network access."""
    cassettes = tmp_path_factory.mktemp("cassettes")
    out = tmp_path_factory.mktemp("record-run")
    gateway = scripted_gateway(str(cassettes), "record")
    pipeline = Pipeline(fixture_config(str(cassettes), mode="record"), str(out))
    pipeline.gateway = gateway
    pipeline.run()
    # Standalone judge-verdict cassettes used by the scoring tests.
    for gt, pred in JUDGE_PAIRS:
        compare_llm(gt, pred, "gpt-4o-mini", gateway)
    # Same-text alignment cassettes used by the agreement (iaa) tests.
    docs = load_dataset(FIXTURE_DATASET)
    compute_subject_iaa(docs, docs, backbone="gpt-4o-mini", gateway=gateway)
    return str(cassettes)
