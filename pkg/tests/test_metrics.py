import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from anonbench.corpus.model import Document, EntitySpan, PiiCategory
from anonbench.metrics import (
    GROUP_KEYS,
    SubjectExposure,
    TABLE_COLUMNS,
    breakdown,
    compute_cpr,
    compute_entity_recall,
    compute_ipr,
    compute_one_minus_aac,
    compute_token_recall,
    exposures_from_cells,
    inference_accuracy,
    mean_utility,
    metrics_table,
    rouge_l,
    spearman_rho,
)
from anonbench.metrics import MetricsReport
from anonbench.scoring import ScoreCell


def cell(doc_id, subject_id, score, category="Age", judge="rule", hardness=1):
    return ScoreCell(
        doc_id=doc_id,
        subject_id=subject_id,
        category=PiiCategory(category),
        gt_value="gt",
        pred_value="pred",
        score=score,
        judge=judge,
        gt_hardness=hardness,
        gt_certainty=5,
    )


class TestExposureMetrics:
    def test_worked_example(self):
        exposures = [
            SubjectExposure("d", 0, o=4, a=2.0),
            SubjectExposure("d", 1, o=2, a=1.5),
            SubjectExposure("e", 0, o=3, a=0.0),
        ]
        assert compute_cpr(exposures) == pytest.approx(0.611111, abs=1e-6)
        assert compute_ipr(exposures) == pytest.approx(0.583333, abs=1e-6)

    def test_empty_is_none(self):
        assert compute_cpr([]) is None
        assert compute_ipr([]) is None

    def test_exposures_from_cells_groups_by_doc_and_subject(self):
        cells = [
            cell("d", 0, 1.0),
            cell("d", 0, 0.5),
            cell("d", 1, 0.0),
            cell("e", 0, 1.0),
        ]
        exposures = exposures_from_cells(cells)
        assert [(x.doc_id, x.subject_id, x.o, x.a) for x in exposures] == [
            ("d", 0, 2, 1.5),
            ("d", 1, 1, 0.0),
            ("e", 0, 1, 1.0),
        ]

    @given(
        st.lists(
            st.tuples(st.integers(1, 6), st.integers(0, 6)).filter(
                lambda t: t[1] <= t[0]
            ),
            min_size=1,
            max_size=10,
        )
    )
    def test_against_definition(self, rows):
        exposures = [
            SubjectExposure("d", i, o=o, a=float(a)) for i, (o, a) in enumerate(rows)
        ]
        total_o = sum(o for o, _ in rows)
        total_a = sum(a for _, a in rows)
        assert compute_cpr(exposures) == pytest.approx(1 - total_a / total_o)
        assert compute_ipr(exposures) == pytest.approx(
            sum(1 - a / o for o, a in rows) / len(rows)
        )

    def test_one_minus_aac_targets_only(self):
        doc = Document(doc_id="d", source="tab", text="x", target_subject_id=0)
        cells = [cell("d", 0, 1.0), cell("d", 0, 0.0), cell("d", 1, 1.0)]
        assert compute_one_minus_aac(doc, cells) == 0.5
        assert compute_one_minus_aac(doc, [cell("d", 1, 1.0)]) is None
        doc_no_target = Document(doc_id="d", source="tab", text="x")
        assert compute_one_minus_aac(doc_no_target, cells) is None


def spanned_doc(text, spans):
    return Document(
        doc_id="d",
        source="tab",
        text=text,
        entity_spans=[
            EntitySpan(start=s, end=e, entity_type="PERSON",
                       identifier_type=it, entity_id=eid)
            for s, e, it, eid in spans
        ],
    )


class TestSpanMetrics:
    def test_token_recall_counts_span_tokens(self):
        text = "Ana Lima met Bo in Paris"
        doc = spanned_doc(
            text,
            [(0, 8, "direct", "e1"), (13, 15, "direct", "e2"), (19, 24, "quasi", "e3")],
        )
        # "Ana Lima" (2 tokens) removed, "Bo" kept, "Paris" kept: 2/4.
        assert compute_token_recall(doc, "[x] met Bo in Paris") == 0.5

    def test_masking_is_case_sensitive_and_ws_normalized(self):
        text = "Ana  Lima called"
        doc = spanned_doc(text, [(0, 9, "direct", "e1")])
        assert compute_token_recall(doc, "ana lima called") == 1.0
        assert compute_token_recall(doc, "Ana\tLima called") == 0.0

    def test_no_spans_is_none(self):
        doc = Document(doc_id="d", source="tab", text="x")
        assert compute_token_recall(doc, "x") is None
        assert compute_entity_recall(doc, "x", "direct") is None

    def test_entity_recall_requires_all_spans_masked(self):
        text = "Ana here, Ana there, Bo alone"
        doc = spanned_doc(
            text, [(0, 3, "direct", "p1"), (10, 13, "direct", "p1"), (21, 23, "direct", "p2")]
        )
        # p1 has one surviving span ("Ana there" kept) so it is unprotected.
        assert compute_entity_recall(doc, "[x] here, Ana there, [y] alone", "direct") == 0.5
        assert compute_entity_recall(doc, text, "quasi") is None

    def test_entity_recall_exhaustive_subsets(self):
        # Up to 4 spans over 2 entities; enumerate every mask subset and check
        # against the direct definition.
        words = ["alpha", "beta", "gamma", "delta"]
        text = " ".join(words)
        starts = [text.index(w) for w in words]
        entity_ids = ["e1", "e1", "e2", "e2"]
        doc = spanned_doc(
            text,
            [
                (s, s + len(w), "direct", eid)
                for s, w, eid in zip(starts, words, entity_ids)
            ],
        )
        for keep in itertools.product([True, False], repeat=4):
            anon = " ".join(w if k else "[x]" for w, k in zip(words, keep))
            expected_protected = {
                eid: all(not k for w, k, e in zip(words, keep, entity_ids) if e == eid)
                for eid in set(entity_ids)
            }
            expected = sum(expected_protected.values()) / len(expected_protected)
            assert compute_entity_recall(doc, anon, "direct") == pytest.approx(expected)


def reference_rouge_l(reference, candidate):
    ref, cand = reference.split(), candidate.split()
    if not ref and not cand:
        return 1.0
    if not ref or not cand:
        return 0.0
    table = [[0] * (len(cand) + 1) for _ in range(len(ref) + 1)]
    for i in range(1, len(ref) + 1):
        for j in range(1, len(cand) + 1):
            if ref[i - 1] == cand[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    lcs = table[-1][-1]
    if lcs == 0:
        return 0.0
    p, r = lcs / len(cand), lcs / len(ref)
    return 2 * p * r / (p + r)


class TestRougeAndUtility:
    def test_empty_cases(self):
        assert rouge_l("", "") == 1.0
        assert rouge_l("a b", "") == 0.0
        assert rouge_l("", "a b") == 0.0

    def test_identity(self):
        assert rouge_l("the quick fox", "the quick fox") == 1.0

    @given(
        st.lists(st.sampled_from("abcde"), max_size=20),
        st.lists(st.sampled_from("abcde"), max_size=20),
    )
    def test_matches_reference(self, ref_tokens, cand_tokens):
        ref, cand = " ".join(ref_tokens), " ".join(cand_tokens)
        assert rouge_l(ref, cand) == pytest.approx(reference_rouge_l(ref, cand))

    def test_mean_utility_formula(self):
        assert mean_utility(10, 10, 1.0) == 1.0
        assert mean_utility(1, 1, 0.0) == 0.0
        assert mean_utility(9, 8, 0.75) == pytest.approx(
            ((8 / 9) + (7 / 9) + 0.75) / 3
        )

    def test_mean_utility_bounds(self):
        with pytest.raises(ValueError):
            mean_utility(0, 5, 0.5)
        with pytest.raises(ValueError):
            mean_utility(5, 11, 0.5)
        with pytest.raises(ValueError):
            mean_utility(5, 5, 1.5)


class TestSpearman:
    def test_identity_and_reversal(self):
        assert spearman_rho([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
        assert spearman_rho([1, 2, 3, 4], [40, 30, 20, 10]) == pytest.approx(-1.0)

    def test_degenerate_cases(self):
        assert spearman_rho([1], [2]) is None
        assert spearman_rho([1, 1, 1], [1, 2, 3]) is None
        with pytest.raises(ValueError):
            spearman_rho([1, 2], [1, 2, 3])

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    @pytest.mark.filterwarnings("ignore:An input array is constant")
    def test_against_scipy_with_ties(self):
        scipy_stats = pytest.importorskip("scipy.stats")
        rng = random.Random(7)
        for _ in range(200):
            n = rng.randint(3, 12)
            xs = [rng.randint(0, 4) for _ in range(n)]
            ys = [rng.randint(0, 4) for _ in range(n)]
            expected = scipy_stats.spearmanr(xs, ys).statistic
            got = spearman_rho(xs, ys)
            if expected != expected:  # NaN: a constant series
                assert got is None
            else:
                assert got == pytest.approx(expected)


class TestAggregation:
    def test_inference_accuracy(self):
        cells = [cell("d", 0, 1.0), cell("d", 0, 0.5), cell("d", 0, 0.0)]
        assert inference_accuracy(cells) == pytest.approx(0.5)
        assert inference_accuracy([]) is None

    def test_breakdown_by_hardness(self):
        cells = [
            cell("d", 0, 1.0, hardness=1),
            cell("d", 0, 0.0, hardness=2),
            cell("d", 1, 0.5, hardness=1),
        ]
        rows = breakdown(cells, "hardness").rows
        assert set(rows) == {"1", "2"}
        assert rows["1"]["n_cells"] == 2
        assert rows["1"]["cpr"] == pytest.approx(1 - 1.5 / 2)
        assert rows["2"]["cpr"] == pytest.approx(1.0)

    def test_breakdown_unknown_key(self):
        with pytest.raises(ValueError):
            breakdown([cell("d", 0, 1.0)], "colour")
        assert "hardness" in GROUP_KEYS

    def test_table_column_order(self):
        labels = [label for label, _ in TABLE_COLUMNS]
        assert labels == ["R", "ER_di", "ER_qi", "1-AAC", "CPR", "IPR", "Mean"]
        report = MetricsReport(
            cpr=0.5, ipr=0.25, one_minus_aac=1 / 3, token_recall=0.75,
            er_direct=1.0, er_quasi=0.0, mean_util=0.125,
        )
        table = metrics_table({"m/b": report})
        row = [line for line in table.splitlines() if line.startswith("m/b")][0]
        assert row.split()[1:] == [
            "0.750", "1.000", "0.000", "0.333", "0.500", "0.250", "0.125"
        ]

    def test_table_renders_missing_as_dash(self):
        table = metrics_table({"m/b": MetricsReport()})
        row = [line for line in table.splitlines() if line.startswith("m/b")][0]
        assert set(row.split()[1:]) == {"-"}
