"""Dataset statistics: document, subject and PII aggregates."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .model import Document, PiiCategory


@dataclass
class StatisticsReport:
    documents: int = 0
    subjects: int = 0
    piis: int = 0
    piis_certainty_ge3: int = 0
    avg_subjects_per_doc: float = 0.0
    avg_piis_per_subject: float = 0.0
    avg_doc_length_chars: float = 0.0
    per_category: dict[str, int] = field(default_factory=dict)
    subjects_per_doc_hist: dict[int, int] = field(default_factory=dict)
    piis_per_subject_hist: dict[int, int] = field(default_factory=dict)
    per_source: dict[str, "StatisticsReport"] = field(default_factory=dict)

    def to_obj(self) -> dict:
        obj = {
            "documents": self.documents,
            "subjects": self.subjects,
            "piis": self.piis,
            "piis_certainty_ge3": self.piis_certainty_ge3,
            "avg_subjects_per_doc": self.avg_subjects_per_doc,
            "avg_piis_per_subject": self.avg_piis_per_subject,
            "avg_doc_length_chars": self.avg_doc_length_chars,
            "per_category": dict(sorted(self.per_category.items())),
            "subjects_per_doc_hist": {
                str(k): v for k, v in sorted(self.subjects_per_doc_hist.items())
            },
            "piis_per_subject_hist": {
                str(k): v for k, v in sorted(self.piis_per_subject_hist.items())
            },
        }
        if self.per_source:
            obj["per_source"] = {
                src: rep.to_obj() for src, rep in sorted(self.per_source.items())
            }
        return obj


def _aggregate(docs: list[Document]) -> StatisticsReport:
    report = StatisticsReport()
    category_counts: Counter[str] = Counter()
    subj_hist: Counter[int] = Counter()
    pii_hist: Counter[int] = Counter()
    total_chars = 0
    for doc in docs:
        report.documents += 1
        report.subjects += len(doc.subjects)
        subj_hist[len(doc.subjects)] += 1
        total_chars += len(doc.text)  # raw character count, no normalization
        for subject in doc.subjects:
            pii_hist[len(subject.piis)] += 1
            for pii in subject.piis:
                report.piis += 1
                if pii.certainty >= 3:
                    report.piis_certainty_ge3 += 1
                category_counts[pii.category.value] += 1
    report.per_category = {cat.value: category_counts.get(cat.value, 0) for cat in PiiCategory}
    report.subjects_per_doc_hist = dict(subj_hist)
    report.piis_per_subject_hist = dict(pii_hist)
    if report.documents:
        report.avg_subjects_per_doc = round(report.subjects / report.documents, 2)
        report.avg_doc_length_chars = round(total_chars / report.documents, 2)
    if report.subjects:
        report.avg_piis_per_subject = round(report.piis / report.subjects, 2)
    return report


def dataset_statistics(docs: list[Document]) -> StatisticsReport:
    """Aggregate counts over a corpus, with per-source sub-reports."""
    if not docs:
        raise ValueError("dataset_statistics requires a non-empty document list")
    report = _aggregate(docs)
    sources = sorted({doc.source for doc in docs})
    if len(sources) > 1:
        for source in sources:
            report.per_source[source] = _aggregate(
                [d for d in docs if d.source == source]
            )
    return report


def statistics_table(report: StatisticsReport) -> str:
    """Plain-text table of the headline statistics."""
    rows = [
        ("Documents", f"{report.documents}"),
        ("Subjects", f"{report.subjects}"),
        ("PIIs", f"{report.piis}"),
        ("PIIs (certainty >= 3)", f"{report.piis_certainty_ge3}"),
        ("Avg subjects/doc", f"{report.avg_subjects_per_doc:.2f}"),
        ("Avg PIIs/subject", f"{report.avg_piis_per_subject:.2f}"),
        ("Avg doc length (chars)", f"{report.avg_doc_length_chars:.2f}"),
    ]
    width = max(len(name) for name, _ in rows)
    lines = [f"{name:<{width}}  {value}" for name, value in rows]
    lines.append("")
    lines.append("Per-category counts:")
    for name, count in report.per_category.items():
        lines.append(f"  {name:<14} {count}")
    return "\n".join(lines)
