"""Core domain types: datasets, schemas, jobs, tasks, and annotation ideals.

An annotation *ideal* is the annotator-independent content of an annotation
(a span+tag, a document class, or a relation tree), stored once per example.
An annotation *event* records that a particular annotator asserted an ideal
during a particular task. All offsets are Unicode code points into the
example's content.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from labelkit.errors import EmptyAfterTrim, InvalidPayload, OutOfBounds

MetadataValue = Union[str, int, float, bool]


class AnnotatorKind(str, Enum):
    HUMAN = "human"
    MODEL = "model"


class ClassificationMode(str, Enum):
    SINGLE_LABEL = "single-label"
    MULTI_LABEL = "multi-label"


class JobState(str, Enum):
    OPEN = "open"
    COMPLETE = "complete"
    ARCHIVED = "archived"


class TaskState(str, Enum):
    PENDING = "pending"
    LEASED = "leased"
    SUBMITTED = "submitted"


class EventSource(str, Enum):
    ANNOTATOR = "annotator"
    PRE_ANNOTATION_ACCEPT = "pre-annotation-accept"


class PreAnnotationState(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class Verdict(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class JudgmentCause(str, Enum):
    MANUAL = "manual"
    THRESHOLD_BATCH = "threshold-batch"
    TRANSITIVE = "transitive"
    LEXICAL_BATCH = "lexical-batch"


class ReviewScope(str, Enum):
    HUMANS = "humans"
    MODELS = "models"
    ALL = "all"

    def includes(self, kind: AnnotatorKind) -> bool:
        if self is ReviewScope.ALL:
            return True
        if self is ReviewScope.HUMANS:
            return kind is AnnotatorKind.HUMAN
        return kind is AnnotatorKind.MODEL


# ---------------------------------------------------------------------------
# Entities


@dataclass(frozen=True)
class Example:
    id: str
    content: str
    metadata: dict[str, MetadataValue] = field(default_factory=dict)


@dataclass(frozen=True)
class ContextConfig:
    """Groups examples sharing `group_by` metadata and orders them by `sort_by`."""

    group_by: str
    sort_by: str


@dataclass
class Dataset:
    id: str
    name: str
    examples: list[Example]
    context_config: ContextConfig | None = None


@dataclass(frozen=True)
class EntityTag:
    id: str
    name: str
    color: str | None = None


@dataclass
class Schema:
    """The taxonomy: entity tags, document classes, and relation types."""

    id: str
    name: str
    entity_tags: list[EntityTag] = field(default_factory=list)
    classes: list[str] = field(default_factory=list)
    classification_mode: ClassificationMode = ClassificationMode.SINGLE_LABEL
    relation_types: list[str] = field(default_factory=list)
    allows_nonterminals: bool = False

    def tag_ids(self) -> set[str]:
        return {t.id for t in self.entity_tags}


@dataclass(frozen=True)
class Annotator:
    id: str
    display_name: str
    kind: AnnotatorKind = AnnotatorKind.HUMAN


@dataclass
class Team:
    id: str
    name: str
    members: list[str]


@dataclass
class Job:
    id: str
    dataset_id: str
    schema_id: str
    team_id: str
    redundancy: int
    state: JobState = JobState.OPEN


@dataclass
class Task:
    id: str
    job_id: str
    annotator_id: str
    example_id: str
    state: TaskState = TaskState.PENDING


# ---------------------------------------------------------------------------
# Annotation payloads


@dataclass(frozen=True)
class SpanPayload:
    start: int
    end: int
    tag: str


@dataclass(frozen=True)
class ClassPayload:
    class_id: str


@dataclass(frozen=True)
class IdealRef:
    """Relation-tree node referring to an existing span ideal on the example."""

    ideal_id: str


@dataclass(frozen=True)
class NonTerminal:
    """User-defined container node grouping constituents (e.g. a "job" grouping
    title, company and dates). `local_id` distinguishes same-label nodes within
    one tree."""

    label: str
    local_id: str


RelationNode = Union[IdealRef, NonTerminal]


@dataclass(frozen=True)
class RelationEdge:
    parent: RelationNode
    child: RelationNode
    label: str


@dataclass(frozen=True)
class RelationPayload:
    edges: tuple[RelationEdge, ...]


Payload = Union[SpanPayload, ClassPayload, RelationPayload]


@dataclass(frozen=True)
class AnnotationIdeal:
    id: str
    example_id: str
    payload: Payload


@dataclass(frozen=True)
class AnnotationEvent:
    id: str
    ideal_id: str
    task_id: str
    source: EventSource
    created_at: int  # UTC milliseconds


@dataclass(frozen=True)
class PreAnnotation:
    id: str
    ideal_id: str
    job_id: str
    origin: str
    state: PreAnnotationState = PreAnnotationState.PENDING


@dataclass(frozen=True)
class ReviewJudgment:
    id: str
    job_id: str
    ideal_id: str
    reviewer_id: str
    verdict: Verdict
    cause: JudgmentCause
    trigger_ideal_id: str | None  # accepted ideal that caused a transitive rejection
    created_at: int


# ---------------------------------------------------------------------------
# Span normalization


def normalize_span(content: str, start: int, end: int) -> tuple[int, int]:
    """Trim leading/trailing whitespace from the selected slice.

    Offsets are code points into `content`. Raises OutOfBounds for invalid
    offsets and EmptyAfterTrim when the slice is entirely whitespace.
    """
    if not (0 <= start < end <= len(content)):
        raise OutOfBounds(f"span [{start}, {end}) out of bounds for length {len(content)}")
    while start < end and content[start].isspace():
        start += 1
    while end > start and content[end - 1].isspace():
        end -= 1
    if start == end:
        raise EmptyAfterTrim(f"span [{start}, {end}) is entirely whitespace")
    return start, end


# ---------------------------------------------------------------------------
# Payload canonicalization and validation


def _node_key(node: RelationNode) -> list[str]:
    if isinstance(node, IdealRef):
        return ["ideal", node.ideal_id]
    return ["nt", node.label, node.local_id]


def _edge_key(edge: RelationEdge) -> str:
    return json.dumps([_node_key(edge.parent), _node_key(edge.child), edge.label])


def canonicalize_payload(content: str, payload: Payload) -> Payload:
    """Return the canonical form used for interning.

    Spans are whitespace-normalized; relation edges are deduplicated and
    sorted lexicographically; class payloads are already canonical.
    """
    if isinstance(payload, SpanPayload):
        start, end = normalize_span(content, payload.start, payload.end)
        return SpanPayload(start, end, payload.tag)
    if isinstance(payload, RelationPayload):
        unique = {_edge_key(e): e for e in payload.edges}
        return RelationPayload(tuple(unique[k] for k in sorted(unique)))
    return payload


def payload_kind(payload: Payload) -> str:
    if isinstance(payload, SpanPayload):
        return "span"
    if isinstance(payload, ClassPayload):
        return "class"
    return "relation"


def payload_to_dict(payload: Payload) -> dict:
    if isinstance(payload, SpanPayload):
        return {"kind": "span", "start": payload.start, "end": payload.end, "tag": payload.tag}
    if isinstance(payload, ClassPayload):
        return {"kind": "class", "class_id": payload.class_id}
    return {
        "kind": "relation",
        "edges": [
            {"parent": _node_key(e.parent), "child": _node_key(e.child), "label": e.label}
            for e in payload.edges
        ],
    }


def _node_from_key(key: list) -> RelationNode:
    if not isinstance(key, list) or not key:
        raise InvalidPayload(f"bad relation node: {key!r}")
    if key[0] == "ideal" and len(key) == 2:
        return IdealRef(str(key[1]))
    if key[0] == "nt" and len(key) == 3:
        return NonTerminal(str(key[1]), str(key[2]))
    raise InvalidPayload(f"bad relation node: {key!r}")


def payload_from_dict(data: dict) -> Payload:
    """Parse a payload from its JSON dict form; raises InvalidPayload on shape errors."""
    if not isinstance(data, dict):
        raise InvalidPayload(f"payload must be an object, got {type(data).__name__}")
    kind = data.get("kind")
    try:
        if kind == "span":
            start, end = data["start"], data["end"]
            if not isinstance(start, int) or not isinstance(end, int) or isinstance(start, bool):
                raise InvalidPayload("span offsets must be integers")
            return SpanPayload(start, end, str(data["tag"]))
        if kind == "class":
            return ClassPayload(str(data["class_id"]))
        if kind == "relation":
            edges = data["edges"]
            if not isinstance(edges, list):
                raise InvalidPayload("relation edges must be a list")
            return RelationPayload(
                tuple(
                    RelationEdge(
                        _node_from_key(e["parent"]), _node_from_key(e["child"]), str(e["label"])
                    )
                    for e in edges
                )
            )
    except KeyError as exc:
        raise InvalidPayload(f"payload missing field {exc}") from exc
    raise InvalidPayload(f"unknown payload kind: {kind!r}")


def canonical_payload_json(payload: Payload) -> str:
    """Deterministic JSON encoding of an already-canonical payload."""
    return json.dumps(payload_to_dict(payload), sort_keys=True, separators=(",", ":"))


def validate_relation_forest(payload: RelationPayload) -> None:
    """Check that the edges form a forest: each child has at most one parent
    and no node is its own ancestor. Partial trees are permitted."""
    parent_of: dict[str, str] = {}
    for edge in payload.edges:
        parent_key = json.dumps(_node_key(edge.parent))
        child_key = json.dumps(_node_key(edge.child))
        if child_key == parent_key:
            raise InvalidPayload("relation edge links a node to itself")
        if child_key in parent_of:
            raise InvalidPayload("relation node has more than one parent")
        parent_of[child_key] = parent_key
    for start in parent_of:
        node, hops = start, 0
        while node in parent_of:
            node = parent_of[node]
            hops += 1
            if node == start or hops > len(parent_of):
                raise InvalidPayload("relation edges contain a cycle")


def validate_payload(
    example: Example,
    payload: Payload,
    schema: Schema,
    *,
    span_ideal_ids: set[str] | None = None,
) -> Payload:
    """Validate `payload` against the example content and schema, returning
    its canonical form.

    `span_ideal_ids` is the set of span-ideal ids already interned on this
    example; relation nodes referencing ideals must be members. Raises
    InvalidPayload on any violation.
    """
    if isinstance(payload, SpanPayload):
        if payload.tag not in schema.tag_ids():
            raise InvalidPayload(f"unknown entity tag: {payload.tag!r}")
        try:
            return canonicalize_payload(example.content, payload)
        except (OutOfBounds, EmptyAfterTrim) as exc:
            raise InvalidPayload(str(exc)) from exc
    if isinstance(payload, ClassPayload):
        if payload.class_id not in schema.classes:
            raise InvalidPayload(f"unknown class: {payload.class_id!r}")
        return payload
    if isinstance(payload, RelationPayload):
        if not payload.edges:
            raise InvalidPayload("relation payload has no edges")
        for edge in payload.edges:
            if edge.label not in schema.relation_types:
                raise InvalidPayload(f"unknown relation type: {edge.label!r}")
            for node in (edge.parent, edge.child):
                if isinstance(node, NonTerminal) and not schema.allows_nonterminals:
                    raise InvalidPayload("schema does not allow non-terminal nodes")
                if isinstance(node, IdealRef) and span_ideal_ids is not None:
                    if node.ideal_id not in span_ideal_ids:
                        raise InvalidPayload(
                            f"relation references unknown span ideal: {node.ideal_id!r}"
                        )
        canonical = canonicalize_payload(example.content, payload)
        assert isinstance(canonical, RelationPayload)
        validate_relation_forest(canonical)
        return canonical
    raise InvalidPayload(f"unsupported payload type: {type(payload).__name__}")


# ---------------------------------------------------------------------------
# Conflict predicate


def _relation_nodes(payload: RelationPayload) -> frozenset[str]:
    keys = set()
    for edge in payload.edges:
        keys.add(json.dumps(_node_key(edge.parent)))
        keys.add(json.dumps(_node_key(edge.child)))
    return frozenset(keys)


def ideals_conflict(a: AnnotationIdeal, b: AnnotationIdeal, schema: Schema) -> bool:
    """True iff accepting one of `a`, `b` makes the other necessarily wrong.

    Two span ideals conflict when their ranges share any offset, regardless of
    tag. Two class ideals conflict only in single-label mode when the classes
    differ. Relation ideals conflict only when they cover the identical node
    set with different edges. Exactly equal payloads are the same ideal and
    never conflict; the predicate is symmetric and irreflexive.
    """
    if a.example_id != b.example_id or a.id == b.id or a.payload == b.payload:
        return False
    pa, pb = a.payload, b.payload
    if isinstance(pa, SpanPayload) and isinstance(pb, SpanPayload):
        return pa.start < pb.end and pb.start < pa.end
    if isinstance(pa, ClassPayload) and isinstance(pb, ClassPayload):
        return (
            schema.classification_mode is ClassificationMode.SINGLE_LABEL
            and pa.class_id != pb.class_id
        )
    if isinstance(pa, RelationPayload) and isinstance(pb, RelationPayload):
        return _relation_nodes(pa) == _relation_nodes(pb) and set(pa.edges) != set(pb.edges)
    return False
