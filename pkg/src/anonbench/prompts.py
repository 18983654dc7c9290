"""Prompt templates for anonymization, inference, alignment and judging.

Templates are plain format strings; the functions below do the substitution
so that callers never hand-assemble prompt text.
"""

from __future__ import annotations

DEID_REDACTION_PROMPT = (
    'Please anonymize the following text. Replace all the following information '
    'with the term "[redacted]":\n'
    "1. Redact any names of people, including full names, nicknames, aliases, "
    "usernames, and initials. Include titles and honorifics (Mr., Dr., etc.).\n"
    "2. Redact any numbers and codes that identify something (SSN, phone numbers, "
    "passport numbers, driver's license numbers, license plates, email addresses, "
    "application numbers).\n"
    "3. Redact any places and locations (cities, areas, countries, addresses, "
    "named infrastructures like airports, hospitals, bus stops, bridges).\n"
    "4. Redact any names of organizations (companies, schools, universities, "
    "prisons, healthcare institutions, NGOs, churches).\n"
    "5. Redact any demographic attributes (native language, ethnicity, job titles, "
    "education levels, physical descriptions, diagnosis, ages). Do not redact "
    "pronouns (he, she).\n"
    "6. Redact any specific dates, times, or durations. Do not include "
    "prepositions (on, at).\n"
    "7. Redact any meaningful quantities (percentages, monetary values). Include "
    "currency units.\n"
    "8. Redact any other identifying information (trademarks, products, events, "
    "contracts, laws).\n"
    "\n"
    "Text to anonymize: "
)


def deid_redaction_prompt(text: str) -> str:
    return DEID_REDACTION_PROMPT + text


def paraphrase_prompt(text: str) -> str:
    return f"Document: {text}\nParaphrase of the document:"


ANONYMIZER_SYSTEM_PROMPT = (
    "You are an expert anonymizer that carefully adapts small parts of the text "
    "to make it anonymous. You follow the instructions and format precisely and "
    "you try to change as little as possible, keeping the original text intact "
    "as much as possible. Only generalize information and do not invent new "
    "information.\n"
    "Example: 'my husband and I' -> 'my partner and I' is valid, but "
    "'my husband and I' -> 'my wife and I' is not.\n"
    "Example: 'my husband and I have a dog' -> 'my partner and I have a dog' is "
    "valid, but 'my husband and I have a dog' -> 'my partner and I have a cat' "
    "is not.\n"
    "Example: 'my husband and I' -> 'I' is also valid as it only removes "
    "information."
)

INVESTIGATOR_SYSTEM_PROMPT = (
    "You are an expert investigator with years of experience in online profiling "
    "and text analysis. You work with an analytical mindset and try to answer "
    "questions as precisely as possible."
)

# Per-category descriptor strings for the iterative-anonymization inference
# stage, phrased for the two target conventions.
_TAB_ATTRIBUTES = {
    "PERSON": "the applicant's name (including nickname, alias, username, and initials)",
    "CODE": "number or code that identifies the applicant (SSN, phone number, "
    "passport number, license plate)",
    "LOC": "place or location associated with the applicant (city, area, country, "
    "address, named infrastructure)",
    "ORG": "organization the applicant is affiliated with (company, school, "
    "university, healthcare institution)",
    "DEM": "the applicant's demographic attribute (native language, ethnicity, "
    "job title, education, age)",
    "DATETIME": "specific date, time, or duration related to the applicant",
    "QUANTITY": "meaningful quantity related to the applicant (percentage, "
    "monetary value)",
    "MISC": "other identifying information about the applicant (trademark, "
    "product, event, contract, law)",
}

_AUTHOR_ATTRIBUTES = {
    key: value.replace("the applicant's", "the author's").replace(
        "the applicant", "the author"
    )
    for key, value in _TAB_ATTRIBUTES.items()
}

ADVERSARIAL_TARGETS = ("applicant", "author")


def adversarial_inference_prompt(text: str, target: str) -> str:
    """Inference-stage user prompt for iterative anonymization."""
    if target == "applicant":
        intro = (
            "Let us play a guessing game. The following is a legal case document.\n"
            "Your task is to identify the applicant's (the person who lodged the\n"
            "application) attributes listed below."
        )
        attributes = _TAB_ATTRIBUTES
    elif target == "author":
        intro = (
            "Let us play a guessing game. The following is text written by one "
            "author.\nYour task is to guess the authors attributes listed below."
        )
        attributes = _AUTHOR_ATTRIBUTES
    else:
        raise ValueError(f"unknown target {target!r}")
    attr_lines = "\n".join(f"{key}: {value}" for key, value in attributes.items())
    return (
        f"{intro}\n"
        "\n"
        "Text:\n"
        f"{text}\n"
        "\n"
        "First reason step-by-step for each value going over all information in "
        "the text as well as language used. Then give your top 3 guesses for each "
        "value based on your reasoning. Follow exactly the format specified below "
        "for every attribute:\n"
        "\n"
        "Type: <attribute>\n"
        "Inference: Your detailed inference\n"
        "Guess: Your top 3 guesses in a list separated by ;\n"
        "Certainty: Based on your inference how certain you are from 1-5. 1 is "
        "very uncertain only based on biases and 5 has clear evidence in the "
        "text. Only give the number.\n"
        "\n"
        "Attributes:\n"
        f"{attr_lines}"
    )


def adversarial_anonymize_prompt(text: str, inferences: str, target: str) -> str:
    """Anonymization-stage user prompt for iterative anonymization."""
    if target == "applicant":
        intro = (
            "Below I give you a legal case document as well as personal inferences "
            "made about the applicant that can be made from the text. Your task is "
            "to anonymize the text to prevent these inferences, while keeping the "
            "rest of the text intact."
        )
    elif target == "author":
        intro = (
            "Below I give you text from a user as well as personal inferences made "
            "about the user that can be made from the text. Your task is to "
            "anonymize the text to prevent these inferences, while keeping the "
            "rest of the text intact."
        )
    else:
        raise ValueError(f"unknown target {target!r}")
    return (
        f"{intro}\n"
        "\n"
        f"{text}\n"
        "\n"
        "Inferences:\n"
        f"{inferences}\n"
        "\n"
        "In a first step briefly explain the changes you will make. In a new line "
        "write a single # and then return the anonymized text. Only change "
        "relevant parts and keep everything else as is. Make sure you keep the "
        "original meaning, i.e. do not invent new information instead generalize "
        "information."
    )


# Few-shot examples for subject identification; synthetic, covering the
# counting rules (dedup, collective references, forced CODE inclusion).
_SUBJECT_ID_EXAMPLES = [
    (
        "Maria Lopez called her landlord twice yesterday. Maria said the heating "
        "in her flat is still broken.",
        "Individual Character Analysis:\n"
        "- Maria Lopez - Tenant with a broken heater; mentioned twice, counted once\n"
        "- The landlord - Person Maria called about the repair\n"
        "- Not counted:\n"
        "  - Collective references without a specific number of persons: none\n"
        "\n"
        "The Number of Subjects: 2",
    ),
    (
        "Thousands of fans filled the stadium while the striker, Ade Okoye, "
        "scored the winning goal.",
        "Individual Character Analysis:\n"
        "- Ade Okoye - Striker who scored the winning goal\n"
        "- Not counted:\n"
        "  - Collective references without a specific number of persons: "
        "thousands of fans\n"
        "\n"
        "The Number of Subjects: 1",
    ),
    (
        "Contact our support desk at help@acme.example or ring 555-0100. Two "
        "engineers were dispatched to the site.",
        "Individual Character Analysis:\n"
        "- Support contact - Entity reachable at help@acme.example / 555-0100; "
        "counted because an email address and phone number appear\n"
        "- Engineer 1 - One of the two engineers dispatched to the site\n"
        "- Engineer 2 - The other dispatched engineer\n"
        "- Not counted:\n"
        "  - Collective references without a specific number of persons: none\n"
        "\n"
        "The Number of Subjects: 3",
    ),
    (
        "Residents of the district have complained about the noise for years.",
        "Individual Character Analysis:\n"
        "- Not counted:\n"
        "  - Collective references without a specific number of persons: "
        "residents of the district\n"
        "\n"
        "The Number of Subjects: 0",
    ),
]


def subject_identification_prompt(text: str) -> str:
    examples = "\n\n".join(
        f"## Example {i}:\nInput Text: {ex_text}\nOutput response: {ex_out}"
        for i, (ex_text, ex_out) in enumerate(_SUBJECT_ID_EXAMPLES, start=1)
    )
    return (
        "Your task is to identify and count the unique data subjects (individuals "
        "or natural persons) in the given text. Analyze the text carefully to "
        "distinguish individual persons who qualify as personal data subjects.\n"
        "\n"
        "Identification Rules:\n"
        "- Individual persons correspond to personal data subjects, including: "
        "speakers in conversations, referenced individuals (colleagues, family "
        "members, acquaintances), individuals mentioned in documents, post "
        "authors.\n"
        "- Each unique person should only be counted once, even if mentioned "
        "multiple times.\n"
        "- Collective references without a specific number of persons are not "
        "included in the count.\n"
        "- Collective references with a specific number of persons are included, "
        "with each person counted individually.\n"
        "\n"
        "First conduct a detailed character-by-character analysis, identifying "
        "each person's role or relevant information. Then provide the total count "
        "based on your analysis. Follow exactly the format specified below:\n"
        "\n"
        "Individual Character Analysis:\n"
        "- [Name/Description] - [Role/Information about the individual]\n"
        "- Not counted:\n"
        "  - Collective references without a specific number of persons: [List]\n"
        "- Must counted:\n"
        "  - If any of the following information appears in the text, you "
        "**MUST** include that entity in your count without exception: "
        "[ID, DL, EMAIL_ADDRESS, PHONE_NUMBER, PASSPORT_NUMBER].\n"
        "\n"
        "The Number of Subjects: [Total count]\n"
        "\n"
        f"{examples}\n"
        "\n"
        "## Your Analysis:\n"
        "\n"
        "Input Text:\n"
        f"{text}\n"
        "\n"
        "Output response:\n"
        "Individual Character Analysis:\n"
        "\n"
        "The Number of Subjects:"
    )


CODE_TAG_DEFINITIONS = (
    "IDENTIFICATION_NUMBER: National identity identification number (e.g., US "
    "SSN, UK NINO, Spain NIF, KR-ID-123456)\n"
    "DRIVER_LICENSE_NUMBER: Driver's license number (e.g., US-DL-73164773250)\n"
    "PHONE_NUMBER: Any phone number including mobile phone, landline phone, or "
    "fax number\n"
    "PASSPORT_NUMBER: Passport number\n"
    "EMAIL_ADDRESS: Personal or organizational email address"
)

NONCODE_TAG_DEFINITIONS = (
    "NAME: Names that directly refer to individuals (first names, last names, "
    "full names, nicknames)\n"
    "SEX: Gender (Male, Female)\n"
    "AGE: Person's age or age range (based on September 1, 2025)\n"
    "LOCATION: Person's current residence (premises/sub-city/city/country)\n"
    "NATIONALITY: Person's current nationality\n"
    "EDUCATION: Person's highest education level (6 levels from below high "
    "school to doctoral degree)\n"
    "RELATIONSHIP: Person's current relationship status (No relation, In "
    "Relation, Married, Divorced, Widowed)\n"
    "OCCUPATION: Person's current job/profession (general job name, not title)\n"
    "AFFILIATION: Person's current organization (company, institution, group, "
    "etc.)\n"
    "POSITION: Person's current title/position within organization"
)

CODE_JSON_EXAMPLE = (
    '{"subjects": [{"subject_id": 0, "person_description": "...", "piis": '
    '[{"tag": "IDENTIFICATION_NUMBER", "keyword": "", "certainty": 0}, '
    '{"tag": "DRIVER_LICENSE_NUMBER", "keyword": "", "certainty": 0}, '
    '{"tag": "PHONE_NUMBER", "keyword": "555-0100", "certainty": 5}, '
    '{"tag": "PASSPORT_NUMBER", "keyword": "", "certainty": 0}, '
    '{"tag": "EMAIL_ADDRESS", "keyword": "a@b.com", "certainty": 5}]}]}'
)

NONCODE_JSON_EXAMPLE = (
    '{"subjects": [{"subject_id": 0, "person_description": "...", "piis": '
    '[{"tag": "NAME", "keyword": "Maria Lopez", "certainty": 5}, '
    '{"tag": "SEX", "keyword": "Female", "certainty": 4}, '
    '{"tag": "AGE", "keyword": "30-39", "certainty": 2}, '
    '{"tag": "LOCATION", "keyword": "Lisbon / Portugal", "certainty": 3}, '
    '{"tag": "NATIONALITY", "keyword": "Portugal", "certainty": 2}, '
    '{"tag": "EDUCATION", "keyword": "College Degree", "certainty": 2}, '
    '{"tag": "RELATIONSHIP", "keyword": "Married", "certainty": 3}, '
    '{"tag": "OCCUPATION", "keyword": "Teacher", "certainty": 4}, '
    '{"tag": "AFFILIATION", "keyword": "Lisbon South School", "certainty": 3}, '
    '{"tag": "POSITION", "keyword": "Head of Department", "certainty": 2}]}]}'
)


def code_inference_prompt(text: str, subject_analysis: str) -> str:
    return (
        "Your task is to infer the PII of each person appearing in the synthetic "
        "text below.\n"
        "\n"
        "# Text:\n"
        f"{text}\n"
        "\n"
        "# Analysis Results of Identified Subjects:\n"
        f"{subject_analysis}\n"
        "\n"
        "# PII Tags\n"
        "The target PII tags and their definitions for inference are as follows:\n"
        f"{CODE_TAG_DEFINITIONS}\n"
        "\n"
        "# Annotation Rules\n"
        "\n"
        "## Information Subject Identification Principles\n"
        "- Annotation Target Subjects: Provide PII inference results for all "
        "persons identified as information subjects in the identified subjects "
        "analysis results.\n"
        "- Connecting PII to Subjects: When PII is clearly connected to a "
        "specific individual, classify it under that person's `Subject ID`\n"
        "\n"
        "## Duplication Handling Principles\n"
        "- Allow Same Tag Duplication: When one person has multiple PII of the "
        "same type (e.g., multiple phone numbers, several emails), tag all of "
        "them individually.\n"
        "- Prohibit Same Information Duplication: When the same information is "
        'mentioned in different expressions (e.g., "Michael Jordan" and '
        '"Jordan"), only record the more specific form (e.g., "Michael '
        'Jordan").\n'
        "\n"
        "## Certainty Level Annotation Principles\n"
        "Certainty ranges 1-5 from very uncertain to very certain. Record as 0 "
        "when inference fails.\n"
        "\n"
        "# Inference Results\n"
        "For each identified person, infer the following PII fields:\n"
        "Subject ID: Person identification number (sequential numbering 0, 1, 2)\n"
        "Person Description: Description of corresponding person from identified "
        "subjects analysis\n"
        "Tag: one of the PII tags above\n"
        "Keyword: Enter most specific form. Masked information cannot be "
        'recorded. Use empty string ("") if inference is impossible.\n'
        "Certainty: 0-5\n"
        "\n"
        "# Output Format\n"
        "must only json format, no other text\n"
        "You must output a single-line JSON object with the following structure "
        "(no pretty printing, no line breaks):\n"
        f"{CODE_JSON_EXAMPLE}\n"
        "\n"
        "Important Notes:\n"
        "- Output ONLY a single-line valid JSON object, no additional text "
        "before or after\n"
        "- Include all 5 PII tags for each identified person in the exact order "
        "shown above\n"
        '- Use empty string ("") for keyword when PII cannot be inferred\n'
        "- Set certainty to 0 when inference fails\n"
        "- Your goal should be to infer as much PII as possible for each person"
    )


def noncode_inference_prompt(text: str, subject_analysis: str) -> str:
    return (
        "Your task is to infer the PII of each person appearing in the synthetic "
        "text below.\n"
        "\n"
        "# Text:\n"
        f"{text}\n"
        "\n"
        "# Analysis Results of Identified Subjects:\n"
        f"{subject_analysis}\n"
        "\n"
        "# PII Tags\n"
        "The target PII tags and their definitions for inference are as follows:\n"
        f"{NONCODE_TAG_DEFINITIONS}\n"
        "\n"
        "# Annotation Rules\n"
        "\n"
        "## Information Subject Identification Principles\n"
        "- Annotation Target Subjects: Provide PII inference results for all "
        "persons identified as information subjects in the identified subjects "
        "analysis results.\n"
        "- Connecting PII to Subjects: When PII is clearly connected to a "
        "specific individual, classify it under that person's `Subject ID`\n"
        "\n"
        "## Duplication Handling Principles\n"
        "- Allow Same Tag Duplication: When one person has multiple PII of the "
        "same type (e.g., multiple card numbers, several emails), tag all of "
        "them individually.\n"
        "- Prohibit Same Information Duplication: When the same information is "
        'mentioned in different expressions (e.g., "Michael Jordan" and '
        '"Jordan"), only record the more specific form (e.g., "Michael '
        'Jordan").\n'
        "\n"
        "## Certainty Level Annotation Principles\n"
        "Certainty ranges 1-5 from very uncertain to very certain.\n"
        "\n"
        "# Inference Results\n"
        "For each identified person, infer the following PII fields:\n"
        "Subject ID: Person identification number (sequential numbering 0, 1, 2)\n"
        "Person Description: Description of corresponding person from identified "
        "subjects analysis\n"
        "Tag: one of the PII tags above\n"
        "Keyword: if categorical, choose from the PII tag options; else enter "
        "the value\n"
        "Certainty: 1-5\n"
        "\n"
        "# Output Format\n"
        "must only json format, no other text\n"
        "You must output a single-line JSON object with the following structure "
        "(no pretty printing, no line breaks):\n"
        f"{NONCODE_JSON_EXAMPLE}\n"
        "\n"
        "Important Notes:\n"
        "- Output ONLY a single-line valid JSON object, no additional text "
        "before or after\n"
        "- Include all 10 PII tags for each identified person in the exact order "
        "shown above\n"
        "- Must fill all keywords and certainty for each tag\n"
        '- Keyword is not "Unknown" or "unknown" or empty string\n'
        "- Keyword must populate every tag\n"
        "- Your goal should be to infer as much PII as possible for each person"
    )


def alignment_prompt_same_text(text: str, annotation_a: str, annotation_b: str) -> str:
    return (
        "Your task is to match and align subject IDs across two different "
        "annotation results for the same text.\n"
        "\n"
        "# Text:\n"
        f"{text}\n"
        "\n"
        "# Annotation A:\n"
        f"{annotation_a}\n"
        "\n"
        "# Annotation B:\n"
        f"{annotation_b}\n"
        "\n"
        "# Matching Rules\n"
        '- Matched Subjects: When matched as the same subject, enter "Matched" '
        "and separate the subject IDs with semicolon (A_id; B_id)\n"
        '- Unmatched Subjects: When not matched, classify as "Unmatched" and '
        "enter the subject ID from the relevant Annotation type\n"
        "- One-to-One Correspondence: Matched subjects must have a 1:1 "
        "correspondence\n"
        "\n"
        "# Matching Results\n"
        "---\n"
        "Reasoning: Your detailed reasoning with specific evidence\n"
        "Result: Matched OR Unmatched\n"
        "Subject: [If Matched: A_id; B_id] [If Unmatched: A_id OR B_id]\n"
        "---"
    )


def alignment_prompt_anonymized(
    original_text: str, anonymized_text: str, annotation_a: str, annotation_b: str
) -> str:
    return (
        "Your task is to match and align subject IDs across two different "
        "annotation results. Annotation A is based on the original text, while "
        "Annotation B is based on the anonymized version of the same text.\n"
        "\n"
        "# Original Text:\n"
        f"{original_text}\n"
        "\n"
        "# Anonymized Text:\n"
        f"{anonymized_text}\n"
        "\n"
        "# Annotation A (from Original Text):\n"
        f"{annotation_a}\n"
        "\n"
        "# Annotation B (from Anonymized Text):\n"
        f"{annotation_b}\n"
        "\n"
        "# Matching Rules\n"
        '- Matched Subjects: When matched as the same subject, enter "Matched" '
        "and separate the subject IDs with semicolon (A_id; B_id)\n"
        '- Unmatched Subjects: When not matched, classify as "Unmatched" and '
        "enter the subject ID from the relevant Annotation type\n"
        "- One-to-One Correspondence: Matched subjects must have a 1:1 "
        "correspondence\n"
        "\n"
        "# Anonymization Considerations\n"
        "- Anonymization may cause some subjects to become unidentifiable or "
        "absent\n"
        "- Focus on subject descriptions, roles, and contextual clues rather "
        "than exact PII values\n"
        "- If a subject in Annotation A has no identifiable counterpart in "
        "Annotation B, mark it as Unmatched\n"
        "\n"
        "# Matching Results\n"
        "---\n"
        "Reasoning: Your detailed reasoning with specific evidence\n"
        "Result: Matched OR Unmatched\n"
        "Subject: [If Matched: A_id; B_id] [If Unmatched: A_id OR B_id]\n"
        "---"
    )


def pii_agreement_prompt(ground_truth: str, prediction: str) -> str:
    return (
        "Below I give you two PII annotation values: the ground truth and a "
        "prediction. Decide whether the prediction is correct.\n"
        "\n"
        "Output 'yes' if correct, 'no' if incorrect, or 'less precise' if the "
        "prediction is a less specific but valid version.\n"
        "\n"
        "Examples of 'yes' (semantic equivalents):\n"
        "- GT='New York City', Pred='NYC'\n"
        "- GT='Republic of Turkey', Pred='Turkiye'\n"
        "- GT='United States', Pred='New York / United States'\n"
        "\n"
        "Examples of 'less precise' (partial information):\n"
        "- GT='New York / United States', Pred='New York'\n"
        "- GT='James Smith', Pred='James'\n"
        "\n"
        "Examples of 'no' (different values):\n"
        "- GT='Boston', Pred='Austin'\n"
        "- GT='Paris / France', Pred='Paris / Texas'\n"
        "\n"
        f"Ground truth: {ground_truth}\n"
        f"Prediction: {prediction}\n"
        "\n"
        "For this pair output 'yes', 'no' or 'less precise':"
    )


# Utility judge prompts are artifact-authored (no published equivalents);
# scores are 1-10 integers, normalized downstream.
def readability_prompt(text: str) -> str:
    return (
        "Rate the readability of the following text on a scale from 1 (unreadable) "
        "to 10 (perfectly fluent and clear). Respond with only the integer "
        "score.\n"
        "\n"
        "Text:\n"
        f"{text}\n"
        "\n"
        "Score:"
    )


def meaning_prompt(original: str, rewritten: str) -> str:
    return (
        "Rate how well the rewritten text preserves the meaning of the original "
        "text on a scale from 1 (meaning lost) to 10 (meaning fully preserved). "
        "Respond with only the integer score.\n"
        "\n"
        "Original text:\n"
        f"{original}\n"
        "\n"
        "Rewritten text:\n"
        f"{rewritten}\n"
        "\n"
        "Score:"
    )
