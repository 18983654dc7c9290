"""Two-stage subject-wise PII inference attack.

Stage A identifies every data subject in a text; Stage B infers fixed-format
(CODE) and free-text (NON-CODE) PIIs per subject through two separate calls.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from . import prompts
from .backbones import complete_text
from .corpus.model import CODE_CATEGORIES, NONCODE_CATEGORIES, PiiCategory
from .gateway import GatewayMode, LlmGateway

ADVERSARY_TEMPERATURE = 0.1

TAG_TO_CATEGORY = {
    "IDENTIFICATION_NUMBER": PiiCategory.ID_NUMBER,
    "DRIVER_LICENSE_NUMBER": PiiCategory.DRIVER_LICENSE,
    "PHONE_NUMBER": PiiCategory.PHONE,
    "PASSPORT_NUMBER": PiiCategory.PASSPORT,
    "EMAIL_ADDRESS": PiiCategory.EMAIL,
    "NAME": PiiCategory.NAME,
    "SEX": PiiCategory.SEX,
    "AGE": PiiCategory.AGE,
    "LOCATION": PiiCategory.LOCATION,
    "NATIONALITY": PiiCategory.NATIONALITY,
    "EDUCATION": PiiCategory.EDUCATION,
    "RELATIONSHIP": PiiCategory.RELATIONSHIP,
    "OCCUPATION": PiiCategory.OCCUPATION,
    "AFFILIATION": PiiCategory.AFFILIATION,
    "POSITION": PiiCategory.POSITION,
}
CATEGORY_TO_TAG = {cat: tag for tag, cat in TAG_TO_CATEGORY.items()}
CODE_TAGS = tuple(CATEGORY_TO_TAG[c] for c in (
    PiiCategory.ID_NUMBER,
    PiiCategory.DRIVER_LICENSE,
    PiiCategory.PHONE,
    PiiCategory.PASSPORT,
    PiiCategory.EMAIL,
))
NONCODE_TAGS = tuple(CATEGORY_TO_TAG[c] for c in (
    PiiCategory.NAME,
    PiiCategory.SEX,
    PiiCategory.AGE,
    PiiCategory.LOCATION,
    PiiCategory.NATIONALITY,
    PiiCategory.EDUCATION,
    PiiCategory.RELATIONSHIP,
    PiiCategory.OCCUPATION,
    PiiCategory.AFFILIATION,
    PiiCategory.POSITION,
))


class AdversaryError(RuntimeError):
    def __init__(self, message: str, stage: str = ""):
        super().__init__(f"[{stage}] {message}" if stage else message)
        self.stage = stage


@dataclass(frozen=True)
class InferredSubject:
    subject_id: int
    description: str


@dataclass(frozen=True)
class Claim:
    category: PiiCategory
    value: str
    certainty: int


@dataclass
class InferenceResult:
    subjects: list[InferredSubject] = field(default_factory=list)
    claims: dict[int, list[Claim]] = field(default_factory=dict)
    transcripts: dict[str, str] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def validate(self) -> None:
        ids = {s.subject_id for s in self.subjects}
        for subject_id in self.claims:
            if subject_id not in ids:
                raise AdversaryError(
                    f"claim references unknown subject {subject_id}"
                )

    def to_obj(self) -> dict:
        return {
            "subjects": [
                {"subject_id": s.subject_id, "description": s.description}
                for s in self.subjects
            ],
            "claims": {
                str(sid): [
                    {
                        "category": c.category.value,
                        "value": c.value,
                        "certainty": c.certainty,
                    }
                    for c in claims
                ]
                for sid, claims in sorted(self.claims.items())
            },
            "transcripts": self.transcripts,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "InferenceResult":
        result = cls(
            subjects=[
                InferredSubject(int(s["subject_id"]), s["description"])
                for s in obj.get("subjects", [])
            ],
            claims={
                int(sid): [
                    Claim(
                        category=PiiCategory(c["category"]),
                        value=c["value"],
                        certainty=int(c["certainty"]),
                    )
                    for c in claims
                ]
                for sid, claims in obj.get("claims", {}).items()
            },
            transcripts=dict(obj.get("transcripts", {})),
            diagnostics=list(obj.get("diagnostics", [])),
        )
        result.validate()
        return result


def evaluable_claims(
    result: InferenceResult, certainty_floor: int = 1
) -> dict[int, list[Claim]]:
    """Claims that enter scoring: non-empty value, certainty at or above floor."""
    return {
        sid: [
            c
            for c in claims
            if c.value.strip() and c.certainty >= certainty_floor
        ]
        for sid, claims in result.claims.items()
    }


_COUNT_RE = re.compile(r"The Number of Subjects\s*:\s*(\d+)", re.IGNORECASE)
_ANALYSIS_RE = re.compile(r"Individual Character Analysis\s*:", re.IGNORECASE)


def parse_subject_analysis(transcript: str) -> tuple[list[InferredSubject], list[str]]:
    """Parse the bullet list and declared count out of a Stage A transcript.

    Bullets are authoritative; a differing declared count only produces a
    diagnostic.
    """
    diagnostics: list[str] = []
    m = _ANALYSIS_RE.search(transcript)
    if not m:
        raise AdversaryError("missing 'Individual Character Analysis' block", "stage_a")
    count_match = _COUNT_RE.search(transcript, m.end())
    if not count_match:
        raise AdversaryError("missing 'The Number of Subjects' line", "stage_a")
    block = transcript[m.end() : count_match.start()]

    descriptions: list[str] = []
    skipping_sublist = False
    for line in block.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if not stripped.startswith("-"):
            continue
        is_top_level = not line.startswith((" ", "\t"))
        body = stripped.lstrip("-").strip()
        if is_top_level:
            lowered = body.lower()
            if lowered.startswith("not counted") or lowered.startswith("must counted"):
                skipping_sublist = True
                continue
            skipping_sublist = False
            if body:
                descriptions.append(body)
        elif not skipping_sublist and body:
            # Indented continuation bullets outside the excluded sublists are
            # kept; models occasionally indent the whole list.
            descriptions.append(body)

    declared = int(count_match.group(1))
    if declared != len(descriptions):
        diagnostics.append(
            f"declared subject count {declared} != {len(descriptions)} bullets; "
            "bullets win"
        )
    subjects = [
        InferredSubject(subject_id=i, description=desc)
        for i, desc in enumerate(descriptions)
    ]
    return subjects, diagnostics


def render_subject_analysis(subjects: list[InferredSubject]) -> str:
    """Stage A result rendered back into the Stage B prompt slot."""
    lines = ["Individual Character Analysis:"]
    for s in subjects:
        lines.append(f"- Subject {s.subject_id}: {s.description}")
    lines.append("")
    lines.append(f"The Number of Subjects: {len(subjects)}")
    return "\n".join(lines)


def identify_subjects(
    text: str, backbone: str, gateway: LlmGateway
) -> tuple[list[InferredSubject], str, list[str]]:
    """Stage A: returns (subjects, raw transcript, diagnostics)."""
    if not text.strip():
        raise AdversaryError("text is empty", "stage_a")
    prompt = prompts.subject_identification_prompt(text)
    content, _, resp = complete_text(gateway, backbone, prompt, ADVERSARY_TEMPERATURE)
    subjects, diagnostics = parse_subject_analysis(content)
    if resp.truncated:
        diagnostics.append("stage_a output truncated at max_output")
    return subjects, content, diagnostics


def _parse_json_object(content: str) -> dict:
    text = content.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        start, end = text.find("{"), text.rfind("}")
        if start != -1 and end > start:
            return json.loads(text[start : end + 1])
        raise


def _parse_stage_b(
    content: str,
    allowed_tags: tuple[str, ...],
    subjects: list[InferredSubject],
    require_all_tags: bool,
    stage: str,
) -> dict[int, list[Claim]]:
    try:
        obj = _parse_json_object(content)
    except json.JSONDecodeError as exc:
        raise AdversaryError(f"response is not valid JSON: {exc}", stage) from exc
    known_ids = {s.subject_id for s in subjects}
    claims: dict[int, list[Claim]] = {}
    entries = obj.get("subjects")
    if not isinstance(entries, list):
        raise AdversaryError("JSON object lacks a 'subjects' list", stage)
    for entry in entries:
        sid = int(entry.get("subject_id", -1))
        if sid not in known_ids:
            raise AdversaryError(f"subject_id {sid} out of range", stage)
        subject_claims: list[Claim] = []
        seen_tags: set[str] = set()
        for pii in entry.get("piis", []):
            tag = str(pii.get("tag", "")).upper()
            if tag not in TAG_TO_CATEGORY:
                raise AdversaryError(f"unknown category name {tag!r}", stage)
            if tag not in allowed_tags:
                raise AdversaryError(
                    f"category {tag} not permitted in this call", stage
                )
            seen_tags.add(tag)
            certainty = int(pii.get("certainty", 0))
            if not 0 <= certainty <= 5:
                raise AdversaryError(
                    f"certainty {certainty} outside [0, 5] for subject {sid}", stage
                )
            subject_claims.append(
                Claim(
                    category=TAG_TO_CATEGORY[tag],
                    value=str(pii.get("keyword", "")),
                    certainty=certainty,
                )
            )
        if require_all_tags:
            missing = [t for t in allowed_tags if t not in seen_tags]
            if missing:
                raise AdversaryError(
                    f"subject {sid} missing field(s) {', '.join(missing)}", stage
                )
        claims[sid] = subject_claims
    return claims


def _stage_b_call(
    text: str,
    subjects: list[InferredSubject],
    backbone: str,
    gateway: LlmGateway,
    code: bool,
) -> tuple[dict[int, list[Claim]], str]:
    stage = "stage_b_code" if code else "stage_b_noncode"
    analysis = render_subject_analysis(subjects)
    if code:
        prompt = prompts.code_inference_prompt(text, analysis)
        tags: tuple[str, ...] = CODE_TAGS
        require_all = False
    else:
        prompt = prompts.noncode_inference_prompt(text, analysis)
        tags = NONCODE_TAGS
        require_all = True
    content, _, _ = complete_text(gateway, backbone, prompt, ADVERSARY_TEMPERATURE)
    try:
        return _parse_stage_b(content, tags, subjects, require_all, stage), content
    except AdversaryError:
        if gateway.mode is GatewayMode.REPLAY:
            raise
        # One reprompt on malformed structured output in live/record mode.
        content, _, _ = complete_text(gateway, backbone, prompt, ADVERSARY_TEMPERATURE)
        return _parse_stage_b(content, tags, subjects, require_all, stage), content


def infer_code_piis(
    text: str,
    subjects: list[InferredSubject],
    backbone: str,
    gateway: LlmGateway,
) -> InferenceResult:
    claims, transcript = _stage_b_call(text, subjects, backbone, gateway, code=True)
    result = InferenceResult(
        subjects=list(subjects),
        claims=claims,
        transcripts={"stage_b_code": transcript},
    )
    result.validate()
    return result


def infer_noncode_piis(
    text: str,
    subjects: list[InferredSubject],
    backbone: str,
    gateway: LlmGateway,
) -> InferenceResult:
    claims, transcript = _stage_b_call(text, subjects, backbone, gateway, code=False)
    result = InferenceResult(
        subjects=list(subjects),
        claims=claims,
        transcripts={"stage_b_noncode": transcript},
    )
    result.validate()
    return result


def run_adversary(
    text: str, backbone: str, gateway: LlmGateway
) -> InferenceResult:
    """Compose Stage A and the two Stage B calls into one result."""
    subjects, stage_a_transcript, diagnostics = identify_subjects(
        text, backbone, gateway
    )
    result = InferenceResult(
        subjects=subjects,
        claims={s.subject_id: [] for s in subjects},
        transcripts={"stage_a": stage_a_transcript},
        diagnostics=diagnostics,
    )
    if subjects:
        code = infer_code_piis(text, subjects, backbone, gateway)
        noncode = infer_noncode_piis(text, subjects, backbone, gateway)
        for partial in (code, noncode):
            result.transcripts.update(partial.transcripts)
            for sid, claims in partial.claims.items():
                result.claims.setdefault(sid, []).extend(claims)
    result.validate()
    return result
