"""Document / subject / PII data model and validation.

All invariants that make a dataset usable are enforced here, so every
downstream stage can assume well-formed inputs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class ValidationError(ValueError):
    """A record violates the data model.

    Carries enough context (doc_id, field) to point at the offending record.
    """

    def __init__(self, message: str, *, doc_id: str = "", field_name: str = ""):
        super().__init__(message)
        self.doc_id = doc_id
        self.field_name = field_name

    def __str__(self) -> str:
        prefix = []
        if self.doc_id:
            prefix.append(f"doc={self.doc_id}")
        if self.field_name:
            prefix.append(f"field={self.field_name}")
        joined = " ".join(prefix)
        base = super().__str__()
        return f"[{joined}] {base}" if joined else base


class PiiCategory(str, Enum):
    # CODE: fixed-format identifiers
    ID_NUMBER = "IdNumber"
    DRIVER_LICENSE = "DriverLicense"
    PHONE = "Phone"
    PASSPORT = "Passport"
    EMAIL = "Email"
    # NON-CODE: free-text or categorical attributes
    NAME = "Name"
    SEX = "Sex"
    AGE = "Age"
    LOCATION = "Location"
    NATIONALITY = "Nationality"
    EDUCATION = "Education"
    RELATIONSHIP = "Relationship"
    OCCUPATION = "Occupation"
    AFFILIATION = "Affiliation"
    POSITION = "Position"

    @property
    def is_code(self) -> bool:
        return self in CODE_CATEGORIES


CODE_CATEGORIES = frozenset(
    {
        PiiCategory.ID_NUMBER,
        PiiCategory.DRIVER_LICENSE,
        PiiCategory.PHONE,
        PiiCategory.PASSPORT,
        PiiCategory.EMAIL,
    }
)
NONCODE_CATEGORIES = frozenset(set(PiiCategory) - CODE_CATEGORIES)

SEX_OPTIONS = ("Male", "Female")
EDUCATION_OPTIONS = (
    "No High School Diploma",
    "In High School",
    "High School Diploma",
    "In College",
    "College Degree",
    "PhD",
)
RELATIONSHIP_OPTIONS = ("No relation", "In Relation", "Married", "Divorced", "Widowed")

# Reference date used when deriving ages from birth years; configurable by callers.
AGE_REFERENCE_DATE = "2025-09-01"

_AGE_RANGE_RE = re.compile(r"^\s*(\d+)\s*-\s*(\d+)\s*$")
_AGE_POINT_RE = re.compile(r"^\s*(\d+)\s*$")

ENTITY_TYPES = ("PERSON", "CODE", "LOC", "ORG", "DEM", "DATETIME", "QUANTITY", "MISC")
IDENTIFIER_TYPES = ("DIRECT", "QUASI")


def parse_age_value(value: str) -> tuple[int, int]:
    """Parse an age value into a closed (lo, hi) interval.

    Accepts a single non-negative integer or a "lo-hi" range.
    """
    m = _AGE_POINT_RE.match(value)
    if m:
        v = int(m.group(1))
        return (v, v)
    m = _AGE_RANGE_RE.match(value)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        return (lo, hi)
    raise ValueError(f"unparseable age value: {value!r}")


def _check_age(value: str) -> None:
    lo, hi = parse_age_value(value)
    if lo > hi:
        raise ValueError(f"age range reversed: {value!r}")
    if lo != hi and not (0 < hi - lo <= 10):
        raise ValueError(f"age range span {hi - lo} exceeds 10 years: {value!r}")


def parse_location_levels(value: str) -> list[str]:
    """Split a location into its slash-delimited levels, most specific first."""
    levels = [part.strip() for part in value.split("/")]
    return [lvl for lvl in levels if lvl]


def _check_location(value: str) -> None:
    levels = parse_location_levels(value)
    if not 1 <= len(levels) <= 4:
        raise ValueError(f"location must have 1-4 slash-delimited levels: {value!r}")


def _check_option(value: str, options: tuple[str, ...], label: str) -> None:
    folded = {opt.casefold() for opt in options}
    if value.strip().casefold() not in folded:
        raise ValueError(f"{label} value {value!r} not in {options}")


@dataclass(frozen=True)
class PiiRecord:
    category: PiiCategory
    value: str
    hardness: int = 0
    certainty: int = 0

    def validate(self) -> None:
        if not 0 <= self.hardness <= 5:
            raise ValidationError(
                f"hardness {self.hardness} outside [0, 5]", field_name="hardness"
            )
        if not 0 <= self.certainty <= 5:
            raise ValidationError(
                f"certainty {self.certainty} outside [0, 5]", field_name="certainty"
            )
        if self.certainty > 0 and not self.value.strip():
            raise ValidationError(
                "value empty but certainty > 0", field_name="value"
            )
        if not self.value.strip():
            return
        try:
            if self.category is PiiCategory.SEX:
                _check_option(self.value, SEX_OPTIONS, "Sex")
            elif self.category is PiiCategory.EDUCATION:
                _check_option(self.value, EDUCATION_OPTIONS, "Education")
            elif self.category is PiiCategory.RELATIONSHIP:
                _check_option(self.value, RELATIONSHIP_OPTIONS, "Relationship")
            elif self.category is PiiCategory.AGE:
                _check_age(self.value)
            elif self.category is PiiCategory.LOCATION:
                _check_location(self.value)
        except ValueError as exc:
            raise ValidationError(str(exc), field_name="value") from exc


def normalize_pii_value(category: PiiCategory, value: str) -> str:
    """Canonical form used for duplicate detection within a subject."""
    if category in (PiiCategory.PHONE, PiiCategory.ID_NUMBER, PiiCategory.DRIVER_LICENSE):
        digits = re.sub(r"\D", "", value)
        return digits if digits else value.strip().casefold()
    return " ".join(value.split()).casefold()


@dataclass
class SubjectRecord:
    subject_id: int
    description: str
    piis: list[PiiRecord] = field(default_factory=list)

    def validate(self) -> None:
        if self.subject_id < 0:
            raise ValidationError(
                f"subject_id {self.subject_id} negative", field_name="subject_id"
            )
        seen: set[tuple[PiiCategory, str]] = set()
        for pii in self.piis:
            pii.validate()
            key = (pii.category, normalize_pii_value(pii.category, pii.value))
            if key in seen:
                raise ValidationError(
                    f"duplicate ({pii.category.value}, {pii.value!r}) for subject "
                    f"{self.subject_id}",
                    field_name="piis",
                )
            seen.add(key)


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    entity_type: str
    identifier_type: str
    entity_id: str

    def validate(self, text_length: int) -> None:
        if not (0 <= self.start < self.end <= text_length):
            raise ValidationError(
                f"span ({self.start}, {self.end}) out of bounds for text of "
                f"length {text_length}",
                field_name="entity_spans",
            )
        if self.entity_type not in ENTITY_TYPES:
            raise ValidationError(
                f"unknown entity_type {self.entity_type!r}", field_name="entity_type"
            )
        if self.identifier_type not in IDENTIFIER_TYPES:
            raise ValidationError(
                f"unknown identifier_type {self.identifier_type!r}",
                field_name="identifier_type",
            )


DOCUMENT_SOURCES = ("tab", "panorama", "custom")


@dataclass
class Document:
    doc_id: str
    source: str
    text: str
    subjects: list[SubjectRecord] = field(default_factory=list)
    entity_spans: Optional[list[EntitySpan]] = None
    target_subject_id: Optional[int] = None

    def validate(self) -> None:
        try:
            if self.source not in DOCUMENT_SOURCES:
                raise ValidationError(
                    f"unknown source {self.source!r}", field_name="source"
                )
            ids = [s.subject_id for s in self.subjects]
            if ids != list(range(len(ids))):
                raise ValidationError(
                    f"subject ids {ids} not contiguous from 0", field_name="subjects"
                )
            for subject in self.subjects:
                subject.validate()
            if self.entity_spans is not None:
                entity_labels: dict[str, tuple[str, str]] = {}
                for span in self.entity_spans:
                    span.validate(len(self.text))
                    labels = (span.entity_type, span.identifier_type)
                    prior = entity_labels.setdefault(span.entity_id, labels)
                    if prior != labels:
                        raise ValidationError(
                            f"entity {span.entity_id!r} mixes labels {prior} and "
                            f"{labels}",
                            field_name="entity_spans",
                        )
            if self.target_subject_id is not None and self.target_subject_id not in {
                s.subject_id for s in self.subjects
            }:
                raise ValidationError(
                    f"target_subject_id {self.target_subject_id} references no subject",
                    field_name="target_subject_id",
                )
        except ValidationError as exc:
            exc.doc_id = exc.doc_id or self.doc_id
            raise

    def subject(self, subject_id: int) -> SubjectRecord:
        for s in self.subjects:
            if s.subject_id == subject_id:
                return s
        raise KeyError(f"no subject {subject_id} in document {self.doc_id}")
