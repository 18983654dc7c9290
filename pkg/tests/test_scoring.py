import pytest
from hypothesis import given
from hypothesis import strategies as st

from anonbench.adversary import Claim, InferenceResult, InferredSubject
from anonbench.alignment import AlignmentResult
from anonbench.corpus.model import Document, PiiCategory, PiiRecord, SubjectRecord
from anonbench.gateway import CassetteStore, ChatResponse, LlmGateway, ProviderProfile
from anonbench.scoring import (
    compare_llm,
    compare_rule,
    jaro,
    jaro_winkler,
    normalize_code_value,
    parse_judge_verdict,
    score_document,
    strip_honorifics,
)
from tests.conftest import scripted_gateway


def reference_jaro(a: str, b: str) -> float:
    """Textbook definition: match window, transposition count, three-term mean."""
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    window = max(len(a), len(b)) // 2 - 1
    a_flags = [False] * len(a)
    b_flags = [False] * len(b)
    matches = 0
    for i, ch in enumerate(a):
        lo, hi = max(0, i - window), min(len(b), i + window + 1)
        for j in range(lo, hi):
            if not b_flags[j] and b[j] == ch:
                a_flags[i] = b_flags[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    a_matched = [ch for ch, f in zip(a, a_flags) if f]
    b_matched = [ch for ch, f in zip(b, b_flags) if f]
    transpositions = sum(x != y for x, y in zip(a_matched, b_matched)) // 2
    m = matches
    return (m / len(a) + m / len(b) + (m - transpositions) / m) / 3


class TestJaroWinkler:
    def test_martha_marhta(self):
        assert jaro_winkler("MARTHA", "MARHTA") == pytest.approx(0.9611, abs=1e-4)

    def test_identical_and_disjoint(self):
        assert jaro_winkler("abc", "abc") == 1.0
        assert jaro_winkler("abc", "xyz") == 0.0

    def test_casefold_and_trim(self):
        assert jaro_winkler("  Dixon ", "dixon") == 1.0

    def test_no_boost_below_base_threshold(self):
        # Shared prefix but base jaro <= 0.7 must not receive the Winkler boost.
        a, b = "aab", "axyzw"
        base = jaro(a, b)
        assert base <= 0.7
        assert jaro_winkler(a, b) == pytest.approx(base)

    @given(st.text(max_size=12), st.text(max_size=12))
    def test_matches_reference_jaro(self, a, b):
        assert jaro(a.casefold().strip(), b.casefold().strip()) == pytest.approx(
            reference_jaro(a.casefold().strip(), b.casefold().strip())
        )

    @given(st.text(max_size=12), st.text(max_size=12))
    def test_symmetric_and_bounded(self, a, b):
        s = jaro_winkler(a, b)
        assert 0.0 <= s <= 1.0
        assert s == pytest.approx(jaro_winkler(b, a))
        assert s >= jaro(a.casefold().strip(), b.casefold().strip()) - 1e-12


class TestNormalization:
    def test_strip_honorifics(self):
        assert strip_honorifics("Dr. James Smith") == "James Smith"
        assert strip_honorifics("mrs Jane Doe") == "Jane Doe"
        assert strip_honorifics("Smith") == "Smith"

    def test_code_normalization_digits_only(self):
        assert normalize_code_value(PiiCategory.PHONE, "(555) 019-9") == "5550199"
        assert normalize_code_value(PiiCategory.EMAIL, " A@B.COM ") == "a@b.com"


class TestCompareRule:
    def test_code_exact_after_normalization(self):
        out = compare_rule(PiiCategory.PHONE, "555-0199", "(555) 0199")
        assert out.decided and out.score == 1.0
        out = compare_rule(PiiCategory.PHONE, "555-0199", "555-0100")
        assert out.decided and out.score == 0.0

    def test_closed_set_exact(self):
        assert compare_rule(PiiCategory.SEX, "Female", "female").score == 1.0
        out = compare_rule(PiiCategory.SEX, "Female", "Male")
        assert out.decided and out.score == 0.0

    @pytest.mark.parametrize(
        "gt,pred,score",
        [
            ("30", "27", 1.0),
            ("30", "50", 0.0),
            ("25-35", "40", 1.0),   # point prediction widened by the tolerance
            ("25-35", "41", 0.0),
            ("40-45", "42", 1.0),
            ("20-24", "26-30", 0.0),  # ranges compared as-is, no widening
            ("20-26", "26-30", 1.0),
        ],
    )
    def test_age_intervals(self, gt, pred, score):
        out = compare_rule(PiiCategory.AGE, gt, pred)
        assert out.decided and out.score == score

    def test_age_unparseable_goes_to_llm(self):
        assert not compare_rule(PiiCategory.AGE, "thirty", "30").decided

    @pytest.mark.parametrize(
        "gt,pred,score",
        [
            ("Los Angeles / United States", "California", 0.5),
            ("New York / United States", "New York", 1.0),
            ("Boston / United States", "United States", 0.5),
            ("United States", "New York / United States", 1.0),
        ],
    )
    def test_location_rule(self, gt, pred, score):
        out = compare_rule(PiiCategory.LOCATION, gt, pred)
        assert out.decided and out.score == score

    def test_location_contradiction_undecided(self):
        assert not compare_rule(
            PiiCategory.LOCATION, "Paris / France", "Paris / Texas"
        ).decided

    def test_name_honorifics_and_jw_threshold(self):
        out = compare_rule(PiiCategory.NAME, "Dr. James Smith", "James Smith")
        assert out.decided and out.score == 1.0
        assert not compare_rule(PiiCategory.NAME, "James Robert Smith", "Smith").decided

    def test_free_text_threshold(self):
        out = compare_rule(PiiCategory.OCCUPATION, "software engineer", "Software Engineer")
        assert out.decided and out.score == 1.0
        assert not compare_rule(PiiCategory.OCCUPATION, "teacher", "plumber").decided


class TestJudgeVerdicts:
    @pytest.mark.parametrize(
        "content,score,review",
        [
            ("The prediction matches.\nAnswer: yes", 1.0, False),
            ("No.", 0.0, False),
            ("The guess is correct but less precise", 0.5, False),
            ("Yes, though arguably less precise", 0.5, False),
            ("NO!", 0.0, False),
            ("I cannot decide here", 0.0, True),
        ],
    )
    def test_parse(self, content, score, review):
        verdict = parse_judge_verdict(content)
        assert verdict.score == score
        assert verdict.needs_review is review

    def test_compare_llm_replay(self, cassette_dir):
        gateway = scripted_gateway(cassette_dir, "replay")
        assert compare_llm("New York City", "NYC", "gpt-4o-mini", gateway).score == 1.0
        assert compare_llm("James Smith", "James", "gpt-4o-mini", gateway).score == 0.5
        assert compare_llm("Boston", "Austin", "gpt-4o-mini", gateway).score == 0.0


def age_doc(gt_values):
    return Document(
        doc_id="t1",
        source="tab",
        text="irrelevant",
        subjects=[
            SubjectRecord(
                subject_id=0,
                description="target",
                piis=[
                    PiiRecord(category=PiiCategory.AGE, value=v, certainty=5, hardness=1)
                    for v in gt_values
                ],
            )
        ],
        target_subject_id=0,
    )


def age_inference(pred_values):
    return InferenceResult(
        subjects=[InferredSubject(0, "s0")],
        claims={0: [Claim(PiiCategory.AGE, v, 4) for v in pred_values]},
    )


def rule_only_gateway(tmp_path):
    def transport(req):
        raise AssertionError("rule-decidable cells must not reach the judge")

    return LlmGateway(
        CassetteStore(tmp_path),
        mode="live",
        providers={"openai": ProviderProfile(transport=transport)},
    )


class TestScoreDocument:
    alignment = AlignmentResult(matches=[(0, 0)])

    def test_greedy_vs_optimal_pairing(self, tmp_path):
        # Greedy grabs the (30, 35) pair first, stranding 40 with 29 (score 0).
        # The optimal assignment pairs 30-29 and 40-35 for a total of 2.0.
        doc = age_doc(["30", "40"])
        inference = age_inference(["35", "29"])
        gateway = rule_only_gateway(tmp_path)
        greedy = score_document(doc, self.alignment, inference, "gpt-4o-mini", gateway)
        optimal = score_document(
            doc, self.alignment, inference, "gpt-4o-mini", gateway, optimal_pairing=True
        )
        assert sum(c.score for c in greedy) == 1.0
        assert sum(c.score for c in optimal) == 2.0

    def test_no_pred_reuse(self, tmp_path):
        doc = age_doc(["30", "31"])
        inference = age_inference(["30"])
        cells = score_document(
            doc, self.alignment, inference, "gpt-4o-mini", rule_only_gateway(tmp_path)
        )
        assert sorted(c.score for c in cells) == [0.0, 1.0]

    def test_certainty_floors(self, tmp_path):
        doc = age_doc(["30"])
        doc.subjects[0].piis.append(
            PiiRecord(category=PiiCategory.AGE, value="99", certainty=2, hardness=1)
        )
        inference = InferenceResult(
            subjects=[InferredSubject(0, "s0")],
            claims={0: [Claim(PiiCategory.AGE, "30", 0)]},
        )
        cells = score_document(
            doc, self.alignment, inference, "gpt-4o-mini", rule_only_gateway(tmp_path)
        )
        # gt "99" is below the floor; the pred claim is below its floor too,
        # so the single evaluable gt cell has no prediction.
        assert len(cells) == 1
        assert cells[0].score == 0.0 and cells[0].judge == "no_prediction"

    def test_unmatched_subject_scores_zero(self, tmp_path):
        doc = age_doc(["30"])
        alignment = AlignmentResult(unmatched_gt=[0])
        cells = score_document(
            doc, alignment, age_inference(["30"]), "gpt-4o-mini",
            rule_only_gateway(tmp_path),
        )
        assert cells[0].score == 0.0 and cells[0].judge == "unmatched_subject"

    def test_judge_labels(self, tmp_path):
        doc = age_doc(["30"])
        cells = score_document(
            doc, self.alignment, age_inference(["31"]), "gpt-4o-mini",
            rule_only_gateway(tmp_path),
        )
        assert cells[0].judge == "rule"
        assert cells[0].gt_value == "30" and cells[0].pred_value == "31"
