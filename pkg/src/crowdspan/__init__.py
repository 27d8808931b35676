"""crowdspan: reliability measurement and confidence-scored aggregation for
crowdsourced span annotations of short documents."""

from .argmodel import (
    AnnotationSet,
    CharSpan,
    ComponentAnnotation,
    ComponentLabel,
    RelationAnnotation,
    RelationKind,
    Sentiment,
    ValidationPolicy,
    Violation,
    validate,
    to_char_labels,
    spans_from_labels,
)
from .standoff import AnnotationBundle, Document, load_campaign, parse_ann, write_ann
from .metrics import (
    AgreementReport,
    AlphaUResult,
    LabelMatrix,
    Undefined,
    document_report,
    is_defined,
    krippendorff_alpha,
    multi_pi,
    percentage_agreement,
    sentence_reports,
    unitized_alpha,
)

__version__ = "0.1.0"
