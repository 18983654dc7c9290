"""One-to-one subject correspondence between ground truth and inference.

An LLM judge proposes matches; the parser enforces the one-to-one invariant
deterministically (first assignment wins, later conflicts degrade to
unmatched with a diagnostic).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import prompts
from .adversary import InferredSubject
from .backbones import complete_text
from .corpus.model import SubjectRecord

ALIGNMENT_TEMPERATURE = 0.0


class AlignmentError(RuntimeError):
    pass


@dataclass
class AlignmentResult:
    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_gt: list[int] = field(default_factory=list)
    unmatched_pred: list[int] = field(default_factory=list)
    rationale: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def matched_pred(self, gt_id: int) -> Optional[int]:
        for g, p in self.matches:
            if g == gt_id:
                return p
        return None

    def to_obj(self) -> dict:
        return {
            "matches": [list(m) for m in self.matches],
            "unmatched_gt": self.unmatched_gt,
            "unmatched_pred": self.unmatched_pred,
            "rationale": self.rationale,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "AlignmentResult":
        return cls(
            matches=[(int(a), int(b)) for a, b in obj.get("matches", [])],
            unmatched_gt=[int(i) for i in obj.get("unmatched_gt", [])],
            unmatched_pred=[int(i) for i in obj.get("unmatched_pred", [])],
            rationale=list(obj.get("rationale", [])),
            diagnostics=list(obj.get("diagnostics", [])),
        )


_BLOCK_RE = re.compile(
    r"Reasoning\s*:\s*(?P<reasoning>.*?)\s*"
    r"Result\s*:\s*(?P<result>Matched|Unmatched)\s*"
    r"Subject\s*:\s*(?P<subject>[^\n]*)",
    re.IGNORECASE | re.DOTALL,
)
_PAIR_RE = re.compile(r"(\d+)\s*;\s*(\d+)")
_SINGLE_RE = re.compile(r"(?:A_?|B_?)?(\d+)", re.IGNORECASE)


def parse_alignment_transcript(
    transcript: str, gt_ids: Sequence[int], pred_ids: Sequence[int]
) -> AlignmentResult:
    """Parse Reasoning/Result/Subject blocks and repair one-to-one violations."""
    blocks = list(_BLOCK_RE.finditer(transcript))
    if not blocks:
        raise AlignmentError("no parseable matching blocks in judge output")
    gt_set, pred_set = set(gt_ids), set(pred_ids)
    result = AlignmentResult()
    used_gt: set[int] = set()
    used_pred: set[int] = set()
    for block in blocks:
        verdict = block.group("result").lower()
        subject_field = block.group("subject").strip()
        result.rationale.append(block.group("reasoning").strip())
        if verdict == "matched":
            pair = _PAIR_RE.search(subject_field)
            if not pair:
                raise AlignmentError(
                    f"matched block lacks an 'A_id; B_id' pair: {subject_field!r}"
                )
            gt_id, pred_id = int(pair.group(1)), int(pair.group(2))
            if gt_id not in gt_set or pred_id not in pred_set:
                raise AlignmentError(
                    f"subject ids ({gt_id}, {pred_id}) outside supplied ranges"
                )
            if gt_id in used_gt or pred_id in used_pred:
                # First assignment wins; this block degrades to unmatched.
                result.diagnostics.append(
                    f"judge reused subject in pair ({gt_id}, {pred_id}); "
                    "kept first assignment"
                )
                continue
            used_gt.add(gt_id)
            used_pred.add(pred_id)
            result.matches.append((gt_id, pred_id))
    result.unmatched_gt = sorted(gt_set - used_gt)
    result.unmatched_pred = sorted(pred_set - used_pred)
    return result


def render_gt_annotation(subjects: Sequence[SubjectRecord]) -> str:
    lines = []
    for s in subjects:
        pii_summary = "; ".join(
            f"{p.category.value}={p.value}" for p in s.piis if p.value.strip()
        )
        line = f"Subject {s.subject_id}: {s.description}"
        if pii_summary:
            line += f" ({pii_summary})"
        lines.append(line)
    return "\n".join(lines)


def render_pred_annotation(subjects: Sequence[InferredSubject]) -> str:
    return "\n".join(f"Subject {s.subject_id}: {s.description}" for s in subjects)


def align_subjects(
    original_text: str,
    anonymized_text: Optional[str],
    gt: Sequence[SubjectRecord],
    pred: Sequence[InferredSubject],
    backbone: str,
    gateway,
) -> AlignmentResult:
    """Judge-based alignment; ``anonymized_text=None`` selects the same-text
    variant used for agreement computation."""
    if not gt:
        raise AlignmentError("ground-truth subject list is empty")
    gt_ids = [s.subject_id for s in gt]
    pred_ids = [s.subject_id for s in pred]
    if not pred:
        return AlignmentResult(unmatched_gt=sorted(gt_ids))
    annotation_a = render_gt_annotation(gt)
    annotation_b = render_pred_annotation(pred)
    if anonymized_text is None:
        prompt = prompts.alignment_prompt_same_text(
            original_text, annotation_a, annotation_b
        )
    else:
        prompt = prompts.alignment_prompt_anonymized(
            original_text, anonymized_text, annotation_a, annotation_b
        )
    content, _, _ = complete_text(gateway, backbone, prompt, ALIGNMENT_TEMPERATURE)
    return parse_alignment_transcript(content, gt_ids, pred_ids)


def subject_match_ratio(results: Sequence[AlignmentResult]) -> float:
    """Pooled matched-ground-truth fraction across documents."""
    if not results:
        raise ValueError("subject_match_ratio requires at least one result")
    matched = sum(len(r.matches) for r in results)
    total = sum(len(r.matches) + len(r.unmatched_gt) for r in results)
    if total == 0:
        raise ValueError("no ground-truth subjects in any alignment result")
    return matched / total
