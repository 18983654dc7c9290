"""Dataset loading and serialization.

Datasets are UTF-8 JSON Lines files, one document per line.  Loading is
fail-soft: invalid documents are skipped and reported so that partial
corpora remain usable.  ``load_dataset(save_dataset(docs))`` is identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .model import (
    Document,
    EntitySpan,
    PiiCategory,
    PiiRecord,
    SubjectRecord,
    ValidationError,
)

SUPPORTED_FORMATS = ("jsonl",)


@dataclass
class LoadReport:
    documents: list[Document] = field(default_factory=list)
    errors: list[ValidationError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _pii_from_obj(obj: dict) -> PiiRecord:
    try:
        category = PiiCategory(obj["category"])
    except ValueError as exc:
        raise ValidationError(str(exc), field_name="category") from exc
    return PiiRecord(
        category=category,
        value=str(obj.get("value", "")),
        hardness=int(obj.get("hardness", 0)),
        certainty=int(obj.get("certainty", 0)),
    )


def document_from_obj(obj: dict) -> Document:
    doc_id = str(obj.get("doc_id", "<missing doc_id>"))
    try:
        subjects = [
            SubjectRecord(
                subject_id=int(s["subject_id"]),
                description=str(s.get("description", "")),
                piis=[_pii_from_obj(p) for p in s.get("piis", [])],
            )
            for s in obj.get("subjects", [])
        ]
        spans_obj = obj.get("entity_spans")
        spans = None
        if spans_obj is not None:
            spans = [
                EntitySpan(
                    start=int(e["start"]),
                    end=int(e["end"]),
                    entity_type=str(e["entity_type"]),
                    identifier_type=str(e["identifier_type"]),
                    entity_id=str(e["entity_id"]),
                )
                for e in spans_obj
            ]
        doc = Document(
            doc_id=doc_id,
            source=str(obj.get("source", "custom")),
            text=str(obj.get("text", "")),
            subjects=subjects,
            entity_spans=spans,
            target_subject_id=(
                int(obj["target_subject_id"])
                if obj.get("target_subject_id") is not None
                else None
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed record: {exc}", doc_id=doc_id) from exc
    doc.validate()
    return doc


def document_to_obj(doc: Document) -> dict:
    obj: dict = {
        "doc_id": doc.doc_id,
        "source": doc.source,
        "text": doc.text,
        "subjects": [
            {
                "subject_id": s.subject_id,
                "description": s.description,
                "piis": [
                    {
                        "category": p.category.value,
                        "value": p.value,
                        "hardness": p.hardness,
                        "certainty": p.certainty,
                    }
                    for p in s.piis
                ],
            }
            for s in doc.subjects
        ],
    }
    if doc.entity_spans is not None:
        obj["entity_spans"] = [
            {
                "start": e.start,
                "end": e.end,
                "entity_type": e.entity_type,
                "identifier_type": e.identifier_type,
                "entity_id": e.entity_id,
            }
            for e in doc.entity_spans
        ]
    if doc.target_subject_id is not None:
        obj["target_subject_id"] = doc.target_subject_id
    return obj


def load_dataset_report(
    path: Union[str, Path], format: str = "jsonl"
) -> LoadReport:
    """Load every document, collecting per-document validation failures."""
    if format not in SUPPORTED_FORMATS:
        raise ValueError(f"unsupported dataset format {format!r}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    report = LoadReport()
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                report.errors.append(
                    ValidationError(
                        f"line {lineno}: invalid JSON: {exc}", doc_id=f"line {lineno}"
                    )
                )
                continue
            try:
                report.documents.append(document_from_obj(obj))
            except ValidationError as exc:
                report.errors.append(exc)
    return report


def load_dataset(path: Union[str, Path], format: str = "jsonl") -> list[Document]:
    """Load a dataset, raising on the first invalid document."""
    report = load_dataset_report(path, format)
    if report.errors:
        raise report.errors[0]
    return report.documents


def save_dataset(
    docs: Iterable[Document], path: Union[str, Path], format: str = "jsonl"
) -> None:
    if format not in SUPPORTED_FORMATS:
        raise ValueError(f"unsupported dataset format {format!r}")
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for doc in docs:
            handle.write(json.dumps(document_to_obj(doc), ensure_ascii=False))
            handle.write("\n")
