"""Anonymization method drivers.

Each driver turns a document into an :class:`AnonymizationRun` through the
gateway, so replay mode makes every run deterministic.  The external-mask
adapter ingests span lists produced by outside NER tooling.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import prompts
from .backbones import complete_text
from .corpus.model import Document
from .gateway import ChatRequest, LlmGateway

ANONYMIZATION_METHODS = ("deid_gpt", "dp_prompt", "adversarial", "external_mask")

DEID_TEMPERATURE = 0.05
DP_PROMPT_TEMPERATURE = 1.5
DP_PROMPT_TOP_P = 1.0
ADVERSARIAL_TEMPERATURE = 0.1
DEFAULT_ADVERSARIAL_ROUNDS = 3


class AnonymizerError(RuntimeError):
    pass


@dataclass
class RoundTranscript:
    inference_prompt: str
    inference_output: str
    anonymize_prompt: str
    anonymize_output: str


@dataclass
class AnonymizationRun:
    method: str
    backbone: str
    anonymized_text: str
    rounds: list[RoundTranscript] = field(default_factory=list)
    effective_temperature: float = 0.0
    effective_top_p: float = 1.0
    diagnostics: list[str] = field(default_factory=list)


def _complete(
    gateway: LlmGateway,
    backbone: str,
    user_prompt: str,
    temperature: float,
    top_p: float = 1.0,
    system_prompt: Optional[str] = None,
) -> tuple[str, ChatRequest]:
    content, effective, _ = complete_text(
        gateway,
        backbone,
        user_prompt,
        temperature,
        top_p=top_p,
        system_prompt=system_prompt,
    )
    return content, effective


def deid_gpt(doc: Document, backbone: str, gateway: LlmGateway) -> AnonymizationRun:
    """Zero-shot redaction: one prompt, output taken whole."""
    if not doc.text.strip():
        raise AnonymizerError(f"document {doc.doc_id} has empty text")
    prompt = prompts.deid_redaction_prompt(doc.text)
    content, effective = _complete(gateway, backbone, prompt, DEID_TEMPERATURE)
    if not content.strip():
        raise AnonymizerError(f"empty model output for document {doc.doc_id}")
    return AnonymizationRun(
        method="deid_gpt",
        backbone=backbone,
        anonymized_text=content,
        effective_temperature=effective.temperature,
        effective_top_p=effective.top_p,
    )


def dp_prompt(doc: Document, backbone: str, gateway: LlmGateway) -> AnonymizationRun:
    """High-temperature paraphrase; records the provider-capped temperature."""
    if not doc.text.strip():
        raise AnonymizerError(f"document {doc.doc_id} has empty text")
    prompt = prompts.paraphrase_prompt(doc.text)
    content, effective = _complete(
        gateway, backbone, prompt, DP_PROMPT_TEMPERATURE, top_p=DP_PROMPT_TOP_P
    )
    if not content.strip():
        raise AnonymizerError(f"empty model output for document {doc.doc_id}")
    run = AnonymizationRun(
        method="dp_prompt",
        backbone=backbone,
        anonymized_text=content,
        effective_temperature=effective.temperature,
        effective_top_p=effective.top_p,
    )
    if effective.temperature != DP_PROMPT_TEMPERATURE:
        run.diagnostics.append(
            f"temperature capped to {effective.temperature} by provider"
        )
    return run


_HASH_LINE_RE = re.compile(r"^\s*#\s*$", re.MULTILINE)


def split_anonymized_text(transcript: str) -> str:
    """Content after the first line consisting of a single ``#``."""
    m = _HASH_LINE_RE.search(transcript)
    if m:
        return transcript[m.end() :].lstrip("\n")
    # One retry with a trailing-text heuristic: accept a '#' that starts the
    # final non-empty chunk even if it shares the line with the text.
    m2 = re.search(r"(?:^|\n)#[ \t]*(.+)$", transcript, re.DOTALL)
    if m2:
        return m2.group(1).lstrip("\n")
    raise AnonymizerError("no '#' separator found in anonymization transcript")


def target_for_source(source: str) -> str:
    return "applicant" if source == "tab" else "author"


def adversarial_anonymize(
    doc: Document,
    backbone: str,
    gateway: LlmGateway,
    rounds: int = DEFAULT_ADVERSARIAL_ROUNDS,
    target: Optional[str] = None,
) -> AnonymizationRun:
    """Iterative refinement: infer revealing cues, then rewrite, per round."""
    if rounds < 1:
        raise ValueError("rounds must be positive")
    if not doc.text.strip():
        raise AnonymizerError(f"document {doc.doc_id} has empty text")
    if target is None:
        target = target_for_source(doc.source)
    if target not in prompts.ADVERSARIAL_TARGETS:
        raise ValueError(f"unknown target {target!r}")
    if doc.source == "tab" and target != "applicant":
        raise AnonymizerError("tab documents use the applicant target")

    current = doc.text
    transcripts: list[RoundTranscript] = []
    effective_temperature = ADVERSARIAL_TEMPERATURE
    for _ in range(rounds):
        inf_prompt = prompts.adversarial_inference_prompt(current, target)
        inf_out, _ = _complete(
            gateway,
            backbone,
            inf_prompt,
            ADVERSARIAL_TEMPERATURE,
            system_prompt=prompts.INVESTIGATOR_SYSTEM_PROMPT,
        )
        anon_prompt = prompts.adversarial_anonymize_prompt(current, inf_out, target)
        anon_out, effective = _complete(
            gateway,
            backbone,
            anon_prompt,
            ADVERSARIAL_TEMPERATURE,
            system_prompt=prompts.ANONYMIZER_SYSTEM_PROMPT,
        )
        effective_temperature = effective.temperature
        current = split_anonymized_text(anon_out)
        transcripts.append(
            RoundTranscript(
                inference_prompt=inf_prompt,
                inference_output=inf_out,
                anonymize_prompt=anon_prompt,
                anonymize_output=anon_out,
            )
        )
    return AnonymizationRun(
        method="adversarial",
        backbone=backbone,
        anonymized_text=current,
        rounds=transcripts,
        effective_temperature=effective_temperature,
    )


# Tolerant header matching for the inference-stage transcript: backbones at
# high temperature drift on case and spacing.
_GUESS_BLOCK_PATTERN = (
    r"Type\s*:\s*(?P<type>[A-Za-z_]+).*?"
    r"Guess\s*:\s*(?P<guess>.*?)\s*"
    r"Certainty\s*:\s*(?P<certainty>\d+)"
)
_GUESS_BLOCK_RE = re.compile(_GUESS_BLOCK_PATTERN, re.IGNORECASE | re.DOTALL)
_GUESS_BLOCK_STRICT_RE = re.compile(_GUESS_BLOCK_PATTERN, re.DOTALL)


@dataclass(frozen=True)
class InferenceGuess:
    attribute: str
    guesses: tuple[str, ...]
    certainty: int


def parse_inference_guesses(
    transcript: str, strict: bool = False
) -> list[InferenceGuess]:
    """Parse Type/Guess/Certainty blocks out of an inference transcript."""
    pattern = _GUESS_BLOCK_STRICT_RE if strict else _GUESS_BLOCK_RE
    guesses = []
    for m in pattern.finditer(transcript):
        values = tuple(
            g.strip() for g in m.group("guess").split(";") if g.strip()
        )
        guesses.append(
            InferenceGuess(
                attribute=m.group("type").upper(),
                guesses=values,
                certainty=int(m.group("certainty")),
            )
        )
    return guesses


def apply_external_masks(
    doc: Document, masked_spans: list[tuple[int, int, str]]
) -> AnonymizationRun:
    """Replace pre-computed spans with placeholders, right to left."""
    text = doc.text
    ordered = sorted(masked_spans, key=lambda s: (s[0], s[1]))
    previous = None
    for span in ordered:
        start, end, _ = span
        if not (0 <= start < end <= len(text)):
            raise AnonymizerError(
                f"span ({start}, {end}) out of bounds for document {doc.doc_id}"
            )
        if previous is not None and start < previous[1]:
            raise AnonymizerError(
                f"overlapping spans {previous[:2]} and {span[:2]} in document "
                f"{doc.doc_id}"
            )
        previous = span
    for start, end, placeholder in reversed(ordered):
        text = text[:start] + placeholder + text[end:]
    return AnonymizationRun(
        method="external_mask", backbone="-", anonymized_text=text
    )
