"""labelkit: a self-hostable collaborative text annotation platform.

Normalized annotation storage separating annotation ideals from annotation
events, redundant task distribution, agreement-driven review with transitive
rejection, trigram-indexed regex search, and seen-aware analytics.
"""

from labelkit.model import (
    AnnotationEvent,
    AnnotationIdeal,
    Annotator,
    AnnotatorKind,
    ClassPayload,
    ClassificationMode,
    ContextConfig,
    Dataset,
    EntityTag,
    Example,
    Job,
    PreAnnotation,
    RelationEdge,
    RelationPayload,
    ReviewJudgment,
    Schema,
    SpanPayload,
    Task,
    Team,
    Verdict,
    ideals_conflict,
    normalize_span,
)
from labelkit.store import Store

__all__ = [
    "AnnotationEvent",
    "AnnotationIdeal",
    "Annotator",
    "AnnotatorKind",
    "ClassPayload",
    "ClassificationMode",
    "ContextConfig",
    "Dataset",
    "EntityTag",
    "Example",
    "Job",
    "PreAnnotation",
    "RelationEdge",
    "RelationPayload",
    "ReviewJudgment",
    "Schema",
    "SpanPayload",
    "Store",
    "Task",
    "Team",
    "Verdict",
    "ideals_conflict",
    "normalize_span",
]

__version__ = "0.1.0"
