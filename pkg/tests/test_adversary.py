import json

import pytest

from anonbench.adversary import (
    AdversaryError,
    Claim,
    InferenceResult,
    InferredSubject,
    evaluable_claims,
    infer_code_piis,
    infer_noncode_piis,
    identify_subjects,
    parse_subject_analysis,
    render_subject_analysis,
    run_adversary,
)
from anonbench.corpus.model import PiiCategory
from anonbench.gateway import CassetteStore, ChatResponse, LlmGateway, ProviderProfile

STAGE_A_TWO = (
    "Individual Character Analysis:\n"
    "- The tenant - Person with the broken heater\n"
    "- The landlord - Person who was called\n"
    "- Not counted:\n"
    "  - Collective references without a specific number of persons: neighbours\n"
    "- Must counted:\n"
    "  - If any of the following information appears: none\n"
    "\n"
    "The Number of Subjects: 2"
)


def gateway_for(transport, tmp_path, mode="live"):
    return LlmGateway(
        CassetteStore(tmp_path),
        mode=mode,
        providers={"openai": ProviderProfile(transport=transport)},
    )


def noncode_json(n_subjects=1, drop_tag=None, certainty=3):
    tags = [
        "NAME", "SEX", "AGE", "LOCATION", "NATIONALITY",
        "EDUCATION", "RELATIONSHIP", "OCCUPATION", "AFFILIATION", "POSITION",
    ]
    subjects = []
    for sid in range(n_subjects):
        piis = [
            {"tag": t, "keyword": f"v-{t.lower()}", "certainty": certainty}
            for t in tags
            if t != drop_tag
        ]
        subjects.append(
            {"subject_id": sid, "person_description": f"s{sid}", "piis": piis}
        )
    return json.dumps({"subjects": subjects})


class TestStageAParsing:
    def test_bullets_and_count(self):
        subjects, diagnostics = parse_subject_analysis(STAGE_A_TWO)
        assert [s.subject_id for s in subjects] == [0, 1]
        assert subjects[0].description.startswith("The tenant")
        assert diagnostics == []

    def test_excluded_sublists_not_counted(self):
        subjects, _ = parse_subject_analysis(STAGE_A_TWO)
        assert all("Collective" not in s.description for s in subjects)

    def test_bullets_win_over_declared_count(self):
        transcript = STAGE_A_TWO.replace("The Number of Subjects: 2",
                                         "The Number of Subjects: 5")
        subjects, diagnostics = parse_subject_analysis(transcript)
        assert len(subjects) == 2
        assert any("bullets win" in d for d in diagnostics)

    def test_zero_subjects(self):
        transcript = (
            "Individual Character Analysis:\n"
            "- Not counted:\n"
            "  - Collective references without a specific number of persons: crowd\n"
            "\nThe Number of Subjects: 0"
        )
        subjects, diagnostics = parse_subject_analysis(transcript)
        assert subjects == [] and diagnostics == []

    def test_missing_sections_raise(self):
        with pytest.raises(AdversaryError, match="Individual Character Analysis"):
            parse_subject_analysis("The Number of Subjects: 1")
        with pytest.raises(AdversaryError, match="Number of Subjects"):
            parse_subject_analysis("Individual Character Analysis:\n- A - B")

    def test_render_round_trips(self):
        subjects = [InferredSubject(0, "The tenant"), InferredSubject(1, "The landlord")]
        parsed, _ = parse_subject_analysis(render_subject_analysis(subjects))
        assert len(parsed) == 2


class TestStageB:
    subjects = [InferredSubject(0, "s0")]

    def test_code_allows_empty_keywords(self, tmp_path):
        content = json.dumps(
            {
                "subjects": [
                    {
                        "subject_id": 0,
                        "person_description": "s0",
                        "piis": [
                            {"tag": "IDENTIFICATION_NUMBER", "keyword": "", "certainty": 0},
                            {"tag": "EMAIL_ADDRESS", "keyword": "a@b.com", "certainty": 5},
                        ],
                    }
                ]
            }
        )
        gateway = gateway_for(lambda r: ChatResponse(content=content), tmp_path)
        result = infer_code_piis("text", self.subjects, "gpt-4o-mini", gateway)
        values = [(c.category, c.value) for c in result.claims[0]]
        assert (PiiCategory.EMAIL, "a@b.com") in values

    def test_noncode_missing_tag_names_subject_and_field(self, tmp_path):
        gateway = gateway_for(
            lambda r: ChatResponse(content=noncode_json(drop_tag="EDUCATION")),
            tmp_path,
        )
        with pytest.raises(AdversaryError) as err:
            infer_noncode_piis("text", self.subjects, "gpt-4o-mini", gateway)
        assert "subject 0" in str(err.value) and "EDUCATION" in str(err.value)

    def test_unknown_tag_rejected(self, tmp_path):
        content = json.dumps(
            {"subjects": [{"subject_id": 0, "piis": [{"tag": "SHOE_SIZE", "keyword": "9", "certainty": 1}]}]}
        )
        gateway = gateway_for(lambda r: ChatResponse(content=content), tmp_path)
        with pytest.raises(AdversaryError, match="unknown category name"):
            infer_code_piis("text", self.subjects, "gpt-4o-mini", gateway)

    def test_subject_id_out_of_range(self, tmp_path):
        content = json.dumps({"subjects": [{"subject_id": 7, "piis": []}]})
        gateway = gateway_for(lambda r: ChatResponse(content=content), tmp_path)
        with pytest.raises(AdversaryError, match="out of range"):
            infer_code_piis("text", self.subjects, "gpt-4o-mini", gateway)

    def test_certainty_bounds(self, tmp_path):
        content = json.dumps(
            {"subjects": [{"subject_id": 0, "piis": [{"tag": "NAME", "keyword": "x", "certainty": 9}]}]}
        )
        gateway = gateway_for(lambda r: ChatResponse(content=content), tmp_path)
        with pytest.raises(AdversaryError, match="certainty"):
            infer_noncode_piis("text", self.subjects, "gpt-4o-mini", gateway)

    def test_live_mode_reprompts_once_on_malformed_output(self, tmp_path):
        outputs = ["not json at all", noncode_json()]
        calls = []

        def transport(req):
            calls.append(req)
            return ChatResponse(content=outputs[len(calls) - 1])

        gateway = gateway_for(transport, tmp_path)
        result = infer_noncode_piis("text", self.subjects, "gpt-4o-mini", gateway)
        assert len(calls) == 2
        assert len(result.claims[0]) == 10

    def test_json_extracted_from_surrounding_prose(self, tmp_path):
        content = "Here are the results: " + noncode_json() + " Done."
        gateway = gateway_for(lambda r: ChatResponse(content=content), tmp_path)
        result = infer_noncode_piis("text", self.subjects, "gpt-4o-mini", gateway)
        assert len(result.claims[0]) == 10


class TestComposition:
    def test_zero_subjects_short_circuits_stage_b(self, tmp_path):
        calls = []

        def transport(req):
            calls.append(req)
            return ChatResponse(
                content=(
                    "Individual Character Analysis:\n- Not counted:\n"
                    "  - Collective references without a specific number of persons: all\n"
                    "\nThe Number of Subjects: 0"
                )
            )

        gateway = gateway_for(transport, tmp_path)
        result = run_adversary("some text", "gpt-4o-mini", gateway)
        assert result.subjects == [] and result.claims == {}
        assert len(calls) == 1

    def test_truncated_stage_a_flagged(self, tmp_path):
        def transport(req):
            return ChatResponse(content=STAGE_A_TWO, finish_reason="length")

        gateway = gateway_for(transport, tmp_path)
        _, _, diagnostics = identify_subjects("text", "gpt-4o-mini", gateway)
        assert any("truncated" in d for d in diagnostics)

    def test_empty_text_rejected(self, tmp_path):
        gateway = gateway_for(lambda r: ChatResponse(content="x"), tmp_path)
        with pytest.raises(AdversaryError, match="empty"):
            run_adversary("   ", "gpt-4o-mini", gateway)

    def test_result_serialization_round_trip(self):
        result = InferenceResult(
            subjects=[InferredSubject(0, "s0")],
            claims={0: [Claim(PiiCategory.NAME, "Ana", 4)]},
            transcripts={"stage_a": "raw"},
            diagnostics=["note"],
        )
        assert InferenceResult.from_obj(result.to_obj()) == result


class TestEvaluableClaims:
    def test_floor_and_empty_values_filtered(self):
        result = InferenceResult(
            subjects=[InferredSubject(0, "s0")],
            claims={
                0: [
                    Claim(PiiCategory.NAME, "Ana", 4),
                    Claim(PiiCategory.NAME, "", 4),
                    Claim(PiiCategory.AGE, "30", 0),
                    Claim(PiiCategory.SEX, "Female", 2),
                ]
            },
        )
        assert [c.value for c in evaluable_claims(result)[0]] == ["Ana", "Female"]
        assert [c.value for c in evaluable_claims(result, certainty_floor=3)[0]] == ["Ana"]
