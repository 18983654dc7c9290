"""Privacy and utility metrics over scored cells and anonymized texts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .corpus.model import CODE_CATEGORIES, Document, PiiCategory
from .scoring import ScoreCell


@dataclass(frozen=True)
class SubjectExposure:
    """Per-subject totals: O evaluable ground-truth PIIs, A the score sum."""

    doc_id: str
    subject_id: int
    o: int
    a: float


def exposures_from_cells(cells: Sequence[ScoreCell]) -> list[SubjectExposure]:
    totals: dict[tuple[str, int], list[float]] = {}
    order: list[tuple[str, int]] = []
    for cell in cells:
        key = (cell.doc_id, cell.subject_id)
        if key not in totals:
            totals[key] = [0, 0.0]
            order.append(key)
        totals[key][0] += 1
        totals[key][1] += cell.score
    return [
        SubjectExposure(doc_id=d, subject_id=s, o=int(totals[(d, s)][0]), a=totals[(d, s)][1])
        for d, s in order
    ]


def compute_cpr(exposures: Sequence[SubjectExposure]) -> Optional[float]:
    """Pooled: 1 - sum(A) / sum(O)."""
    total_o = sum(e.o for e in exposures)
    if total_o == 0:
        return None
    total_a = sum(e.a for e in exposures)
    return 1.0 - total_a / total_o


def compute_ipr(exposures: Sequence[SubjectExposure]) -> Optional[float]:
    """Subject-averaged: mean over subjects of 1 - A_i / O_i."""
    ratios = [1.0 - e.a / e.o for e in exposures if e.o > 0]
    if not ratios:
        return None
    return sum(ratios) / len(ratios)


def compute_one_minus_aac(
    doc: Document, cells: Sequence[ScoreCell]
) -> Optional[float]:
    """Anonymity of the document's target subject: 1 - A_target / O_target."""
    if doc.target_subject_id is None:
        return None
    target_cells = [
        c
        for c in cells
        if c.doc_id == doc.doc_id and c.subject_id == doc.target_subject_id
    ]
    if not target_cells:
        return None
    a = sum(c.score for c in target_cells)
    return 1.0 - a / len(target_cells)


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def span_is_masked(doc: Document, span, anonymized_text: str) -> bool:
    """A span counts as masked iff its verbatim text no longer appears.

    Comparison is case-sensitive with whitespace runs collapsed.
    """
    surface = _normalize_ws(doc.text[span.start : span.end])
    if not surface:
        return True
    return surface not in _normalize_ws(anonymized_text)


def compute_token_recall(doc: Document, anonymized_text: str) -> Optional[float]:
    """Fraction of annotated span tokens removed from the output."""
    if not doc.entity_spans:
        return None
    total = 0
    masked = 0
    for span in doc.entity_spans:
        tokens = len(doc.text[span.start : span.end].split())
        if tokens == 0:
            continue
        total += tokens
        if span_is_masked(doc, span, anonymized_text):
            masked += tokens
    if total == 0:
        return None
    return masked / total


def compute_entity_recall(
    doc: Document, anonymized_text: str, identifier_type: str
) -> Optional[float]:
    """Fraction of entities with every span masked, per identifier type."""
    if not doc.entity_spans:
        return None
    entities: dict[str, bool] = {}
    for span in doc.entity_spans:
        if span.identifier_type != identifier_type:
            continue
        protected = span_is_masked(doc, span, anonymized_text)
        entities[span.entity_id] = entities.get(span.entity_id, True) and protected
    if not entities:
        return None
    return sum(entities.values()) / len(entities)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(reference: str, candidate: str) -> float:
    """Token-level LCS F1."""
    ref = reference.split()
    cand = candidate.split()
    if not ref and not cand:
        return 1.0
    if not ref or not cand:
        return 0.0
    lcs = _lcs_length(ref, cand)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def mean_utility(readability: float, meaning: float, rouge: float) -> float:
    """Judge scores live in [1, 10]; rescale to [0, 1] and average with ROUGE-L."""
    if not (1.0 <= readability <= 10.0) or not (1.0 <= meaning <= 10.0):
        raise ValueError("judge scores must lie in [1, 10]")
    if not 0.0 <= rouge <= 1.0:
        raise ValueError("rouge must lie in [0, 1]")
    return ((readability - 1) / 9 + (meaning - 1) / 9 + rouge) / 3


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    """Rank correlation with average ranks for ties; None when undefined."""
    if len(xs) != len(ys):
        raise ValueError("series have different lengths")
    if len(xs) < 2:
        return None
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    sxx = sum((r - mx) ** 2 for r in rx)
    syy = sum((r - my) ** 2 for r in ry)
    if sxx == 0 or syy == 0:
        return None
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    return sxy / math.sqrt(sxx * syy)


def inference_accuracy(cells: Sequence[ScoreCell]) -> Optional[float]:
    """Mean cell score: the adversary's hit rate on evaluable PIIs."""
    if not cells:
        return None
    return sum(c.score for c in cells) / len(cells)


GROUP_KEYS = ("pii_category", "pii_class", "hardness", "source")


def _group_key(cell: ScoreCell, group_by: str, doc_sources: dict[str, str]) -> str:
    if group_by == "pii_category":
        return cell.category.value
    if group_by == "pii_class":
        return "CODE" if cell.category in CODE_CATEGORIES else "NON-CODE"
    if group_by == "hardness":
        return str(cell.gt_hardness)
    if group_by == "source":
        return doc_sources.get(cell.doc_id, "unknown")
    raise ValueError(f"unknown group key {group_by!r}; expected one of {GROUP_KEYS}")


@dataclass
class GroupBreakdown:
    group_by: str
    # group label -> (cpr, ipr, n_cells, n_subjects)
    rows: dict[str, dict] = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {"group_by": self.group_by, "rows": self.rows}


def breakdown(
    cells: Sequence[ScoreCell],
    group_by: str,
    doc_sources: Optional[dict[str, str]] = None,
) -> GroupBreakdown:
    doc_sources = doc_sources or {}
    grouped: dict[str, list[ScoreCell]] = {}
    for cell in cells:
        grouped.setdefault(_group_key(cell, group_by, doc_sources), []).append(cell)
    out = GroupBreakdown(group_by=group_by)
    for label in sorted(grouped):
        sub = grouped[label]
        exposures = exposures_from_cells(sub)
        out.rows[label] = {
            "cpr": compute_cpr(exposures),
            "ipr": compute_ipr(exposures),
            "n_cells": len(sub),
            "n_subjects": len(exposures),
        }
    return out


@dataclass
class MetricsReport:
    """Everything the report tables need, at full precision."""

    cpr: Optional[float] = None
    ipr: Optional[float] = None
    one_minus_aac: Optional[float] = None
    token_recall: Optional[float] = None
    er_direct: Optional[float] = None
    er_quasi: Optional[float] = None
    mean_util: Optional[float] = None
    rouge: Optional[float] = None
    readability: Optional[float] = None
    meaning: Optional[float] = None
    accuracy: Optional[float] = None
    n_documents: int = 0
    n_subjects: int = 0
    n_cells: int = 0
    breakdowns: dict[str, GroupBreakdown] = field(default_factory=dict)

    def to_obj(self) -> dict:
        obj = {
            "cpr": self.cpr,
            "ipr": self.ipr,
            "one_minus_aac": self.one_minus_aac,
            "token_recall": self.token_recall,
            "er_direct": self.er_direct,
            "er_quasi": self.er_quasi,
            "mean_utility": self.mean_util,
            "rouge_l": self.rouge,
            "readability": self.readability,
            "meaning": self.meaning,
            "inference_accuracy": self.accuracy,
            "n_documents": self.n_documents,
            "n_subjects": self.n_subjects,
            "n_cells": self.n_cells,
        }
        if self.breakdowns:
            obj["breakdowns"] = {k: v.to_obj() for k, v in self.breakdowns.items()}
        return obj


def _mean_or_none(values: Iterable[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return sum(present) / len(present)


def build_metrics_report(
    documents: Sequence[Document],
    cells: Sequence[ScoreCell],
    anonymized_texts: Optional[dict[str, str]] = None,
    utility_scores: Optional[dict[str, tuple[float, float]]] = None,
    group_by: Sequence[str] = (),
) -> MetricsReport:
    """Aggregate corpus-level metrics.

    `anonymized_texts` maps doc_id to output text (enables R / ER / ROUGE-L);
    `utility_scores` maps doc_id to (readability, meaning) judge scores.
    """
    docs_by_id = {d.doc_id: d for d in documents}
    exposures = exposures_from_cells(cells)
    report = MetricsReport(
        cpr=compute_cpr(exposures),
        ipr=compute_ipr(exposures),
        accuracy=inference_accuracy(cells),
        n_documents=len(documents),
        n_subjects=len(exposures),
        n_cells=len(cells),
    )
    report.one_minus_aac = _mean_or_none(
        compute_one_minus_aac(doc, cells) for doc in documents
    )
    if anonymized_texts:
        paired = [
            (docs_by_id[i], t) for i, t in anonymized_texts.items() if i in docs_by_id
        ]
        report.token_recall = _mean_or_none(
            compute_token_recall(d, t) for d, t in paired
        )
        report.er_direct = _mean_or_none(
            compute_entity_recall(d, t, "DIRECT") for d, t in paired
        )
        report.er_quasi = _mean_or_none(
            compute_entity_recall(d, t, "QUASI") for d, t in paired
        )
        report.rouge = _mean_or_none(rouge_l(d.text, t) for d, t in paired)
    if utility_scores:
        reads = [v[0] for v in utility_scores.values()]
        means = [v[1] for v in utility_scores.values()]
        report.readability = sum(reads) / len(reads)
        report.meaning = sum(means) / len(means)
        if anonymized_texts:
            per_doc = []
            for doc_id, (r, m) in utility_scores.items():
                if doc_id in anonymized_texts and doc_id in docs_by_id:
                    rl = rouge_l(docs_by_id[doc_id].text, anonymized_texts[doc_id])
                    per_doc.append(mean_utility(r, m, rl))
            report.mean_util = _mean_or_none(per_doc)
    doc_sources = {d.doc_id: d.source for d in documents}
    for key in group_by:
        report.breakdowns[key] = breakdown(cells, key, doc_sources)
    return report


TABLE_COLUMNS = (
    ("R", "token_recall"),
    ("ER_di", "er_direct"),
    ("ER_qi", "er_quasi"),
    ("1-AAC", "one_minus_aac"),
    ("CPR", "cpr"),
    ("IPR", "ipr"),
    ("Mean", "mean_utility"),
)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "-"
    return f"{value:.3f}"


def metrics_table(reports: dict[str, MetricsReport]) -> str:
    """Plain-text summary table, one row per method, three decimals."""
    headers = ["Method"] + [name for name, _ in TABLE_COLUMNS]
    rows = []
    for method in sorted(reports):
        obj = reports[method].to_obj()
        rows.append([method] + [_fmt(obj[key]) for _, key in TABLE_COLUMNS])
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)
