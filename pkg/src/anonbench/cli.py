"""Command-line surface for the evaluation pipeline."""

from __future__ import annotations

import functools
import json
import sys

import click

from .corpus.agreement import compute_span_agreement, compute_subject_iaa
from .corpus.loader import load_dataset, load_dataset_report
from .corpus.model import ValidationError
from .corpus.stats import dataset_statistics, statistics_table
from .gateway import GatewayError
from .metrics import GROUP_KEYS
from .pipeline import (
    ANONYMIZE_METHODS,
    Pipeline,
    RunConfig,
    StageError,
    compare_adversaries,
    make_gateway,
)

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_STAGE_FAILURE = 2


@click.group()
def main() -> None:
    """Subject-level privacy evaluation for text anonymization."""


def _guard(fn):
    """Map exception classes onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValidationError, click.ClickException):
            raise
        except (StageError, GatewayError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_STAGE_FAILURE)

    return wrapper


def _handle_validation(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_USER_ERROR)

    return wrapper


def pipeline_options(fn):
    options = [
        click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False)),
        click.option("--method", type=click.Choice(ANONYMIZE_METHODS), default="deid_gpt", show_default=True),
        click.option("--backbone", default="gpt-4o-mini", show_default=True, help="Anonymizer backbone, provider:model."),
        click.option("--adversary", default="gpt-4o-mini", show_default=True, help="Adversary backbone."),
        click.option("--judge", default="gpt-4o-mini", show_default=True, help="Alignment/scoring/utility judge backbone."),
        click.option("--mode", type=click.Choice(["live", "record", "replay"]), default="replay", show_default=True),
        click.option("--certainty-floor", type=click.IntRange(0, 5), default=3, show_default=True),
        click.option("--pred-certainty-floor", type=click.IntRange(0, 5), default=1, show_default=True),
        click.option("--rounds", type=click.IntRange(min=1), default=3, show_default=True),
        click.option("--group-by", "group_by", multiple=True, type=click.Choice(GROUP_KEYS)),
        click.option("--cassettes", "cassette_dir", default="cassettes", show_default=True),
        click.option("--optimal-pairing", is_flag=True),
        click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False)),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _config(dataset, method, backbone, adversary, judge, mode, certainty_floor,
            pred_certainty_floor, rounds, group_by, cassette_dir, optimal_pairing):
    return RunConfig(
        dataset=dataset,
        method=method,
        backbone=backbone,
        adversary=adversary,
        judge=judge,
        mode=mode,
        certainty_floor=certainty_floor,
        pred_certainty_floor=pred_certainty_floor,
        rounds=rounds,
        group_by=tuple(group_by),
        cassette_dir=cassette_dir,
        optimal_pairing=optimal_pairing,
    )


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
def validate(dataset: str) -> None:
    """Check every document against the schema invariants."""
    report = load_dataset_report(dataset)
    for error in report.errors:
        click.echo(f"invalid: {error}", err=True)
    if report.errors or not report.documents:
        if not report.documents and not report.errors:
            click.echo("error: dataset is empty", err=True)
        sys.exit(EXIT_USER_ERROR)
    click.echo(f"ok: {len(report.documents)} documents valid")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Machine output instead of the table.")
@_handle_validation
def stats(dataset: str, as_json: bool) -> None:
    """Corpus statistics: documents, subjects, PIIs, histograms."""
    docs = load_dataset(dataset)
    report = dataset_statistics(docs)
    if as_json:
        click.echo(json.dumps(report.to_obj(), indent=2, sort_keys=True))
    else:
        click.echo(statistics_table(report))


def _stage_command(name: str, runner):
    @main.command(name=name)
    @pipeline_options
    @_handle_validation
    @_guard
    def cmd(out_dir, **kwargs):
        pipeline = Pipeline(_config(**kwargs), out_dir)
        runner(pipeline)
        click.echo(f"{name}: done ({len(pipeline.docs)} documents)")

    return cmd


def _require(pipeline: Pipeline, filename: str) -> dict:
    from .pipeline import _load_jsonl

    path = pipeline.out / filename
    artifacts = _load_jsonl(path)
    missing = [d.doc_id for d in pipeline.docs if d.doc_id not in artifacts]
    if missing:
        raise ValidationError(
            f"{filename} missing documents {missing}; run the earlier stage first"
        )
    return artifacts


_stage_command("anonymize", lambda p: p.stage_anonymize())
_stage_command("infer", lambda p: p.stage_infer(_require(p, "anonymized.jsonl")))
_stage_command(
    "align",
    lambda p: p.stage_align(
        _require(p, "anonymized.jsonl"), _require(p, "inference.jsonl")
    ),
)
_stage_command(
    "score",
    lambda p: p.stage_score(
        _require(p, "inference.jsonl"), _require(p, "alignment.jsonl")
    ),
)


@main.command()
@pipeline_options
@_handle_validation
@_guard
def evaluate(out_dir, **kwargs) -> None:
    """Full pipeline: anonymize, infer, align, score, report."""
    pipeline = Pipeline(_config(**kwargs), out_dir)
    pipeline.run()
    click.echo((pipeline.out / "report.txt").read_text(encoding="utf-8"), nl=False)


@main.command(name="compare-adversaries")
@click.argument("reports", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@_handle_validation
def compare_adversaries_cmd(reports) -> None:
    """Pairwise Spearman rho over CPR/IPR series from report.json files."""
    result = compare_adversaries(list(reports))
    click.echo(json.dumps(result, indent=2, sort_keys=True))


@main.command()
@click.option("--dataset", "dataset_a", required=True, type=click.Path(exists=True, dir_okay=False), help="First annotator's dataset.")
@click.option("--dataset-b", required=True, type=click.Path(exists=True, dir_okay=False), help="Second annotator's dataset.")
@click.option("--judge", default="gpt-4o-mini", show_default=True)
@click.option("--mode", type=click.Choice(["live", "record", "replay"]), default="replay", show_default=True)
@click.option("--certainty-floor", type=click.IntRange(0, 5), default=3, show_default=True)
@click.option("--cassettes", "cassette_dir", default="cassettes", show_default=True)
@_handle_validation
@_guard
def iaa(dataset_a, dataset_b, judge, mode, certainty_floor, cassette_dir) -> None:
    """Inter-annotator agreement between two annotations of one corpus."""
    docs_a = load_dataset(dataset_a)
    docs_b = load_dataset(dataset_b)
    gateway = make_gateway(mode, cassette_dir)
    report = compute_subject_iaa(
        docs_a, docs_b, backbone=judge, gateway=gateway,
        certainty_floor=certainty_floor,
    )
    by_id_b = {d.doc_id: d for d in docs_b}
    spans = {}
    for doc_a in docs_a:
        doc_b = by_id_b.get(doc_a.doc_id)
        if doc_b is None or doc_a.entity_spans is None or doc_b.entity_spans is None:
            continue
        spans[doc_a.doc_id] = compute_span_agreement(
            doc_a.entity_spans, doc_b.entity_spans
        ).to_obj()
    obj = report.to_obj()
    if spans:
        obj["span_agreement"] = spans
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
