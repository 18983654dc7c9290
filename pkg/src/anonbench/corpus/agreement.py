"""Inter-annotator agreement: span overlap and subject-level PII agreement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import Document, EntitySpan


@dataclass
class SpanAgreement:
    exact_rate: float
    partial_rate: float
    n_union: int
    vacuous: bool = False

    def to_obj(self) -> dict:
        return {
            "exact_rate": self.exact_rate,
            "partial_rate": self.partial_rate,
            "n_union": self.n_union,
            "vacuous": self.vacuous,
        }


def _span_key(span: EntitySpan) -> tuple[int, int, str]:
    return (span.start, span.end, span.entity_type)


def _overlaps(a: EntitySpan, b: EntitySpan) -> bool:
    return a.entity_type == b.entity_type and a.start < b.end and b.start < a.end


def compute_span_agreement(
    spans_a: Sequence[EntitySpan], spans_b: Sequence[EntitySpan]
) -> SpanAgreement:
    """Symmetric agreement over the union of the two annotators' spans.

    Exact requires identical offsets and entity type; partial requires any
    character overlap with the same entity type.  Two empty inputs agree
    trivially and are flagged as vacuous.
    """
    if not spans_a and not spans_b:
        return SpanAgreement(exact_rate=1.0, partial_rate=1.0, n_union=0, vacuous=True)
    keys_a = {_span_key(s) for s in spans_a}
    keys_b = {_span_key(s) for s in spans_b}
    union = keys_a | keys_b
    exact = len(keys_a & keys_b)

    def partial_hits(sources, others) -> set:
        hits = set()
        for s in sources:
            if any(_overlaps(s, o) for o in others):
                hits.add(_span_key(s))
        return hits

    partial = partial_hits(spans_a, spans_b) | partial_hits(spans_b, spans_a)
    n = len(union)
    return SpanAgreement(
        exact_rate=exact / n,
        partial_rate=len(partial) / n,
        n_union=n,
    )


@dataclass
class IaaReport:
    subject_match_rate: float
    match_fraction: float
    less_precise_fraction: float
    mismatch_fraction: float
    mean_score: float
    n_subject_pairs: int
    n_value_pairs: int
    per_doc: dict[str, dict] = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {
            "subject_match_rate": self.subject_match_rate,
            "match_fraction": self.match_fraction,
            "less_precise_fraction": self.less_precise_fraction,
            "mismatch_fraction": self.mismatch_fraction,
            "mean_score": self.mean_score,
            "n_subject_pairs": self.n_subject_pairs,
            "n_value_pairs": self.n_value_pairs,
            "per_doc": self.per_doc,
        }


def compute_subject_iaa(
    docs_a: Sequence[Document],
    docs_b: Sequence[Document],
    backbone: str,
    gateway,
    certainty_floor: int = 3,
) -> IaaReport:
    """Agreement between two annotations of the same corpus.

    Annotator B's subjects are treated as predictions against annotator A's:
    subjects are aligned on the shared text, then matched subjects' PII values
    are compared with the same three-tier comparators used for scoring.
    """
    # Local imports keep corpus importable without the judge-side modules.
    from ..adversary import Claim, InferenceResult, InferredSubject
    from ..alignment import align_subjects
    from ..scoring import score_document

    by_id_b = {d.doc_id: d for d in docs_b}
    matched = 0
    total_gt = 0
    scores: list[float] = []
    per_doc: dict[str, dict] = {}
    for doc_a in docs_a:
        doc_b = by_id_b.get(doc_a.doc_id)
        if doc_b is None:
            raise ValueError(f"document {doc_a.doc_id!r} missing from second annotation")
        pred_subjects = [
            InferredSubject(subject_id=s.subject_id, description=s.description)
            for s in doc_b.subjects
        ]
        claims = {
            s.subject_id: [
                Claim(category=p.category, value=p.value, certainty=p.certainty)
                for p in s.piis
                if p.certainty >= certainty_floor
            ]
            for s in doc_b.subjects
        }
        inference = InferenceResult(subjects=pred_subjects, claims=claims)
        alignment = align_subjects(
            original_text=doc_a.text,
            anonymized_text=None,
            gt=doc_a.subjects,
            pred=pred_subjects,
            backbone=backbone,
            gateway=gateway,
        )
        matched += len(alignment.matches)
        total_gt += len(alignment.matches) + len(alignment.unmatched_gt)
        cells = score_document(
            doc_a,
            alignment,
            inference,
            judge_backbone=backbone,
            gateway=gateway,
            gt_certainty_floor=certainty_floor,
            pred_certainty_floor=certainty_floor,
        )
        doc_scores = [c.score for c in cells]
        scores.extend(doc_scores)
        per_doc[doc_a.doc_id] = {
            "matched_subjects": len(alignment.matches),
            "gt_subjects": len(doc_a.subjects),
            "mean_score": sum(doc_scores) / len(doc_scores) if doc_scores else None,
        }
    n = len(scores)
    return IaaReport(
        subject_match_rate=matched / total_gt if total_gt else 0.0,
        match_fraction=sum(1 for s in scores if s == 1.0) / n if n else 0.0,
        less_precise_fraction=sum(1 for s in scores if s == 0.5) / n if n else 0.0,
        mismatch_fraction=sum(1 for s in scores if s == 0.0) / n if n else 0.0,
        mean_score=sum(scores) / n if n else 0.0,
        n_subject_pairs=matched,
        n_value_pairs=n,
        per_doc=per_doc,
    )
