"""Three-tier PII scoring: rule-based comparators with an LLM fallback.

Every ground-truth PII of a matched subject is compared with the aligned
prediction and scored 1.0 / 0.5 / 0.0.  Rules decide what they can; the
semantic-equivalence judge handles the rest.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from . import prompts
from .adversary import InferenceResult, evaluable_claims
from .alignment import AlignmentResult
from .backbones import complete_text
from .corpus.model import (
    CODE_CATEGORIES,
    Document,
    PiiCategory,
    parse_age_value,
    parse_location_levels,
)

JARO_WINKLER_THRESHOLD = 0.85
AGE_TOLERANCE_YEARS = 5
JUDGE_TEMPERATURE = 0.0

FREE_TEXT_CATEGORIES = frozenset(
    {
        PiiCategory.NAME,
        PiiCategory.NATIONALITY,
        PiiCategory.OCCUPATION,
        PiiCategory.AFFILIATION,
        PiiCategory.POSITION,
    }
)
CLOSED_SET_CATEGORIES = frozenset(
    {PiiCategory.SEX, PiiCategory.EDUCATION, PiiCategory.RELATIONSHIP}
)

_HONORIFIC_RE = re.compile(
    r"^(?:mr|mrs|ms|mx|dr|prof|sir|madam|mme|miss)\.?\s+", re.IGNORECASE
)


def jaro(a: str, b: str) -> float:
    """Plain Jaro similarity on the raw strings."""
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    window = max(la, lb) // 2 - 1
    if window < 0:
        window = 0
    match_a = [False] * la
    match_b = [False] * lb
    matches = 0
    for i, ch in enumerate(a):
        lo = max(0, i - window)
        hi = min(lb, i + window + 1)
        for j in range(lo, hi):
            if not match_b[j] and b[j] == ch:
                match_a[i] = True
                match_b[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    transpositions = 0
    k = 0
    for i in range(la):
        if match_a[i]:
            while not match_b[k]:
                k += 1
            if a[i] != b[k]:
                transpositions += 1
            k += 1
    t = transpositions / 2
    m = matches
    return (m / la + m / lb + (m - t) / m) / 3


def jaro_winkler(a: str, b: str) -> float:
    """Jaro with the Winkler common-prefix boost (length <= 4, scale 0.1).

    Inputs are whitespace-trimmed and case-folded before comparison.
    """
    a = a.strip().casefold()
    b = b.strip().casefold()
    base = jaro(a, b)
    if base <= 0.7:
        return base
    prefix = 0
    for ca, cb in zip(a[:4], b[:4]):
        if ca != cb:
            break
        prefix += 1
    return base + prefix * 0.1 * (1 - base)


def strip_honorifics(name: str) -> str:
    return _HONORIFIC_RE.sub("", name.strip())


def normalize_code_value(category: PiiCategory, value: str) -> str:
    if category in (PiiCategory.PHONE, PiiCategory.ID_NUMBER, PiiCategory.DRIVER_LICENSE):
        digits = re.sub(r"\D", "", value)
        if digits:
            return digits
    return value.strip().casefold()


# Minimal containment table backing the "correct strict ancestor" test for
# location values: region -> places it contains.  User gazetteers extend it.
DEFAULT_GAZETTEER: dict[str, frozenset[str]] = {
    "california": frozenset(
        {"los angeles", "san francisco", "san diego", "sacramento", "oakland"}
    ),
    "texas": frozenset({"houston", "austin", "dallas", "san antonio"}),
    "new york": frozenset({"new york city", "nyc", "brooklyn", "manhattan"}),
    "united states": frozenset(
        {
            "california",
            "texas",
            "new york",
            "los angeles",
            "san francisco",
            "houston",
            "austin",
            "chicago",
            "boston",
            "new york city",
            "washington",
            "seattle",
        }
    ),
    "united kingdom": frozenset({"london", "manchester", "edinburgh", "scotland", "england"}),
    "france": frozenset({"paris", "lyon", "marseille"}),
    "germany": frozenset({"berlin", "munich", "hamburg"}),
    "sweden": frozenset({"stockholm", "gothenburg"}),
    "poland": frozenset({"warsaw", "krakow"}),
    "turkey": frozenset({"istanbul", "ankara", "mersin"}),
    "india": frozenset({"mumbai", "delhi", "sambalpur"}),
    "canada": frozenset({"toronto", "vancouver", "ontario", "guelph"}),
    "ontario": frozenset({"toronto", "guelph", "ottawa"}),
}


def _gazetteer_contains(
    region: str, place: str, gazetteer: dict[str, frozenset[str]]
) -> bool:
    return place in gazetteer.get(region, frozenset())


@dataclass(frozen=True)
class RuleOutcome:
    score: Optional[float]
    decided: bool

    @staticmethod
    def undecided() -> "RuleOutcome":
        return RuleOutcome(score=None, decided=False)


def _compare_age(gt_value: str, pred_value: str) -> RuleOutcome:
    try:
        gt_lo, gt_hi = parse_age_value(gt_value)
        pred_lo, pred_hi = parse_age_value(pred_value)
    except ValueError:
        return RuleOutcome.undecided()
    # Point values widen to +/- 5 years; ranges stay as annotated.  Closed
    # intervals, so touching endpoints intersect.
    if gt_lo == gt_hi:
        gt_lo, gt_hi = gt_lo - AGE_TOLERANCE_YEARS, gt_hi + AGE_TOLERANCE_YEARS
    if pred_lo == pred_hi:
        pred_lo, pred_hi = pred_lo - AGE_TOLERANCE_YEARS, pred_hi + AGE_TOLERANCE_YEARS
    intersects = gt_lo <= pred_hi and pred_lo <= gt_hi
    return RuleOutcome(score=1.0 if intersects else 0.0, decided=True)


def _compare_location(
    gt_value: str, pred_value: str, gazetteer: dict[str, frozenset[str]]
) -> RuleOutcome:
    gt_levels = [lvl.casefold() for lvl in parse_location_levels(gt_value)]
    pred_levels = [lvl.casefold() for lvl in parse_location_levels(pred_value)]
    if not gt_levels or not pred_levels:
        return RuleOutcome.undecided()
    gt_set = set(gt_levels)
    # Every predicted level must be accounted for: textually present in the
    # ground truth or related to some ground-truth level via containment.
    for lvl in pred_levels:
        if lvl in gt_set:
            continue
        related = any(
            _gazetteer_contains(lvl, g, gazetteer)
            or _gazetteer_contains(g, lvl, gazetteer)
            for g in gt_levels
        )
        if not related:
            return RuleOutcome.undecided()
    if pred_levels[0] == gt_levels[0] or gt_levels[0] in pred_levels:
        # Deepest specified ground-truth level reproduced exactly.
        return RuleOutcome(score=1.0, decided=True)
    # Prediction is strictly coarser but consistent with the ground truth.
    coarser = all(
        (lvl in gt_set and lvl != gt_levels[0])
        or any(_gazetteer_contains(lvl, g, gazetteer) for g in gt_levels)
        for lvl in pred_levels
    )
    if coarser:
        return RuleOutcome(score=0.5, decided=True)
    return RuleOutcome.undecided()


def compare_rule(
    category: PiiCategory,
    gt_value: str,
    pred_value: str,
    gazetteer: Optional[dict[str, frozenset[str]]] = None,
) -> RuleOutcome:
    """Category-specific rule comparison; undecided falls to the LLM judge."""
    if gazetteer is None:
        gazetteer = DEFAULT_GAZETTEER
    if category in CODE_CATEGORIES:
        equal = normalize_code_value(category, gt_value) == normalize_code_value(
            category, pred_value
        )
        return RuleOutcome(score=1.0 if equal else 0.0, decided=True)
    if category in CLOSED_SET_CATEGORIES:
        equal = gt_value.strip().casefold() == pred_value.strip().casefold()
        return RuleOutcome(score=1.0 if equal else 0.0, decided=True)
    if category is PiiCategory.AGE:
        return _compare_age(gt_value, pred_value)
    if category is PiiCategory.LOCATION:
        return _compare_location(gt_value, pred_value, gazetteer)
    gt_text, pred_text = gt_value, pred_value
    if category is PiiCategory.NAME:
        gt_text = strip_honorifics(gt_text)
        pred_text = strip_honorifics(pred_text)
    if jaro_winkler(gt_text, pred_text) >= JARO_WINKLER_THRESHOLD:
        return RuleOutcome(score=1.0, decided=True)
    return RuleOutcome.undecided()


class JudgeError(RuntimeError):
    pass


@dataclass
class LlmVerdict:
    score: float
    needs_review: bool = False
    raw: str = ""


_WORD_RE = re.compile(r"[a-z]+")


def parse_judge_verdict(content: str) -> LlmVerdict:
    words = _WORD_RE.findall(content.casefold())
    if len(words) >= 2 and words[-2:] == ["less", "precise"]:
        return LlmVerdict(score=0.5, raw=content)
    if words and words[-1] == "yes":
        return LlmVerdict(score=1.0, raw=content)
    if words and words[-1] == "no":
        return LlmVerdict(score=0.0, raw=content)
    return LlmVerdict(score=0.0, needs_review=True, raw=content)


def compare_llm(
    gt_value: str, pred_value: str, backbone: str, gateway
) -> LlmVerdict:
    prompt = prompts.pii_agreement_prompt(gt_value, pred_value)
    content, _, _ = complete_text(gateway, backbone, prompt, JUDGE_TEMPERATURE)
    return parse_judge_verdict(content)


@dataclass
class ScoreCell:
    doc_id: str
    subject_id: int
    category: PiiCategory
    gt_value: str
    pred_value: Optional[str]
    score: float
    judge: str  # rule | llm | unmatched_subject | no_prediction
    gt_hardness: int = 0
    gt_certainty: int = 0
    needs_review: bool = False

    def to_obj(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "subject_id": self.subject_id,
            "category": self.category.value,
            "gt_value": self.gt_value,
            "pred_value": self.pred_value,
            "score": self.score,
            "judge": self.judge,
            "gt_hardness": self.gt_hardness,
            "gt_certainty": self.gt_certainty,
            "needs_review": self.needs_review,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ScoreCell":
        return cls(
            doc_id=obj["doc_id"],
            subject_id=int(obj["subject_id"]),
            category=PiiCategory(obj["category"]),
            gt_value=obj["gt_value"],
            pred_value=obj.get("pred_value"),
            score=float(obj["score"]),
            judge=obj["judge"],
            gt_hardness=int(obj.get("gt_hardness", 0)),
            gt_certainty=int(obj.get("gt_certainty", 0)),
            needs_review=bool(obj.get("needs_review", False)),
        )


class _PairScorer:
    """Scores gt-vs-predicted value pairs, caching LLM calls per pair."""

    def __init__(self, judge_backbone: str, gateway, gazetteer=None):
        self.judge_backbone = judge_backbone
        self.gateway = gateway
        self.gazetteer = gazetteer
        self._llm_cache: dict[tuple[str, str], LlmVerdict] = {}

    def rule(self, category: PiiCategory, gt: str, pred: str) -> RuleOutcome:
        return compare_rule(category, gt, pred, gazetteer=self.gazetteer)

    def llm(self, gt: str, pred: str) -> LlmVerdict:
        key = (gt, pred)
        if key not in self._llm_cache:
            self._llm_cache[key] = compare_llm(
                gt, pred, self.judge_backbone, self.gateway
            )
        return self._llm_cache[key]

    def final_score(
        self, category: PiiCategory, gt: str, pred: str
    ) -> tuple[float, str, bool]:
        """Full decision for one pair: (score, judge, needs_review)."""
        outcome = self.rule(category, gt, pred)
        if outcome.decided:
            # CODE and closed-set mismatches are final; the re-check applies
            # only to free-text categories.
            return outcome.score, "rule", False
        verdict = self.llm(gt, pred)
        return verdict.score, "llm", verdict.needs_review


def _score_category_group(
    scorer: _PairScorer,
    doc_id: str,
    subject_id: int,
    category: PiiCategory,
    gt_piis: list,
    pred_values: list[str],
    optimal: bool,
) -> list[ScoreCell]:
    """Pair same-category values without reusing a prediction."""
    n, m = len(gt_piis), len(pred_values)
    if m == 0:
        return [
            ScoreCell(
                doc_id=doc_id,
                subject_id=subject_id,
                category=category,
                gt_value=p.value,
                pred_value=None,
                score=0.0,
                judge="no_prediction",
                gt_hardness=p.hardness,
                gt_certainty=p.certainty,
            )
            for p in gt_piis
        ]

    def pair_result(i: int, j: int) -> tuple[float, str, bool]:
        return scorer.final_score(category, gt_piis[i].value, pred_values[j])

    assignment: dict[int, int] = {}
    results: dict[tuple[int, int], tuple[float, str, bool]] = {}

    if optimal and n <= 6 and m <= 6:
        # Exhaustive assignment over one-to-one pairings; duplicates per
        # category are rare and small, so brute force is fine.
        for i in range(n):
            for j in range(m):
                results[(i, j)] = pair_result(i, j)
        best_total, best_map = -1.0, {}
        indices = list(range(m))
        for chosen in itertools.permutations(indices, min(n, m)):
            mapping = dict(zip(range(len(chosen)), chosen))
            total = sum(results[(i, j)][0] for i, j in mapping.items())
            if total > best_total:
                best_total, best_map = total, mapping
        assignment = {i: j for i, j in best_map.items() if results[(i, j)][0] > 0}
    else:
        # Greedy best-score assignment: decided rule scores first, then the
        # judge for the survivors, in deterministic order.
        decided: list[tuple[float, int, int]] = []
        undecided_pairs: set[tuple[int, int]] = set()
        for i in range(n):
            for j in range(m):
                outcome = scorer.rule(category, gt_piis[i].value, pred_values[j])
                if outcome.decided:
                    results[(i, j)] = (outcome.score, "rule", False)
                    decided.append((outcome.score, i, j))
                else:
                    undecided_pairs.add((i, j))
        used_gt: set[int] = set()
        used_pred: set[int] = set()
        for score, i, j in sorted(decided, key=lambda t: (-t[0], t[1], t[2])):
            if score <= 0 or i in used_gt or j in used_pred:
                continue
            assignment[i] = j
            used_gt.add(i)
            used_pred.add(j)
        for i in range(n):
            if i in used_gt:
                continue
            best: Optional[tuple[float, int]] = None
            for j in range(m):
                if j in used_pred or (i, j) not in undecided_pairs:
                    continue
                score, judge, review = pair_result(i, j)
                results[(i, j)] = (score, judge, review)
                if best is None or score > best[0]:
                    best = (score, j)
            if best is not None and best[0] > 0:
                assignment[i] = best[1]
                used_gt.add(i)
                used_pred.add(best[1])

    cells = []
    for i, gt_pii in enumerate(gt_piis):
        if i in assignment:
            j = assignment[i]
            if (i, j) not in results:
                results[(i, j)] = pair_result(i, j)
            score, judge, review = results[(i, j)]
            cells.append(
                ScoreCell(
                    doc_id=doc_id,
                    subject_id=subject_id,
                    category=category,
                    gt_value=gt_pii.value,
                    pred_value=pred_values[j],
                    score=score,
                    judge=judge,
                    gt_hardness=gt_pii.hardness,
                    gt_certainty=gt_pii.certainty,
                    needs_review=review,
                )
            )
        else:
            # No positive-scoring prediction left; report the best zero pair
            # against the first free prediction for the audit trail.
            scored_zero = [
                (j, results[(i, j)])
                for j in range(m)
                if (i, j) in results and results[(i, j)][0] == 0.0
            ]
            if scored_zero:
                j, (score, judge, review) = scored_zero[0]
                pred_value, cell_judge = pred_values[j], judge
            else:
                pred_value, cell_judge, review = None, "no_prediction", False
            cells.append(
                ScoreCell(
                    doc_id=doc_id,
                    subject_id=subject_id,
                    category=category,
                    gt_value=gt_pii.value,
                    pred_value=pred_value,
                    score=0.0,
                    judge=cell_judge,
                    gt_hardness=gt_pii.hardness,
                    gt_certainty=gt_pii.certainty,
                    needs_review=review,
                )
            )
    return cells


def score_document(
    doc: Document,
    alignment: AlignmentResult,
    inference: InferenceResult,
    judge_backbone: str,
    gateway,
    gt_certainty_floor: int = 3,
    pred_certainty_floor: int = 1,
    optimal_pairing: bool = False,
    gazetteer: Optional[dict[str, frozenset[str]]] = None,
) -> list[ScoreCell]:
    """One cell per evaluable ground-truth PII (certainty >= floor)."""
    scorer = _PairScorer(judge_backbone, gateway, gazetteer=gazetteer)
    pred_claims = evaluable_claims(inference, certainty_floor=pred_certainty_floor)
    cells: list[ScoreCell] = []
    for subject in doc.subjects:
        gt_piis = [p for p in subject.piis if p.certainty >= gt_certainty_floor]
        if not gt_piis:
            continue
        pred_id = alignment.matched_pred(subject.subject_id)
        if pred_id is None:
            cells.extend(
                ScoreCell(
                    doc_id=doc.doc_id,
                    subject_id=subject.subject_id,
                    category=p.category,
                    gt_value=p.value,
                    pred_value=None,
                    score=0.0,
                    judge="unmatched_subject",
                    gt_hardness=p.hardness,
                    gt_certainty=p.certainty,
                )
                for p in gt_piis
            )
            continue
        claims = pred_claims.get(pred_id, [])
        by_category: dict[PiiCategory, list[str]] = {}
        seen_occurrences: set[tuple[PiiCategory, str]] = set()
        for claim in claims:
            # Top-1 rule: only the first value per (category, occurrence).
            key = (claim.category, claim.value.strip().casefold())
            if key in seen_occurrences:
                continue
            seen_occurrences.add(key)
            by_category.setdefault(claim.category, []).append(claim.value)
        gt_by_category: dict[PiiCategory, list] = {}
        for p in gt_piis:
            gt_by_category.setdefault(p.category, []).append(p)
        for category, piis in gt_by_category.items():
            cells.extend(
                _score_category_group(
                    scorer,
                    doc.doc_id,
                    subject.subject_id,
                    category,
                    piis,
                    by_category.get(category, []),
                    optimal_pairing,
                )
            )
    return cells
