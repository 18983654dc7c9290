from .model import (
    AGE_REFERENCE_DATE,
    CODE_CATEGORIES,
    NONCODE_CATEGORIES,
    Document,
    EntitySpan,
    PiiCategory,
    PiiRecord,
    SubjectRecord,
    ValidationError,
    normalize_pii_value,
    parse_age_value,
    parse_location_levels,
)
from .loader import (
    LoadReport,
    document_from_obj,
    document_to_obj,
    load_dataset,
    load_dataset_report,
    save_dataset,
)
from .stats import StatisticsReport, dataset_statistics, statistics_table
from .agreement import (
    IaaReport,
    SpanAgreement,
    compute_span_agreement,
    compute_subject_iaa,
)

__all__ = [
    "AGE_REFERENCE_DATE",
    "CODE_CATEGORIES",
    "NONCODE_CATEGORIES",
    "Document",
    "EntitySpan",
    "IaaReport",
    "LoadReport",
    "PiiCategory",
    "PiiRecord",
    "SpanAgreement",
    "StatisticsReport",
    "SubjectRecord",
    "ValidationError",
    "compute_span_agreement",
    "compute_subject_iaa",
    "dataset_statistics",
    "document_from_obj",
    "document_to_obj",
    "load_dataset",
    "load_dataset_report",
    "normalize_pii_value",
    "parse_age_value",
    "parse_location_levels",
    "save_dataset",
    "statistics_table",
]
