"""Review and adjudication: consolidation, verdicts with transitive rejection,
threshold batch-accept, and batch lexical review.

Accepting an ideal automatically rejects every conflicting ideal in the same
transaction, so the set of accepted ideals on an example is conflict-free at
every moment. Verdicts may be flipped; flipping an accept revokes the
transitive rejections it caused and re-attributes them to any other accepted
ideal that still conflicts. Judgments annotate, never delete: superseded
rows are kept as an audit trail.
"""

from __future__ import annotations

from dataclasses import dataclass

from labelkit.errors import ConflictsWithAccepted, ExampleNotInJob, UnknownIdeal
from labelkit.model import (
    AnnotationIdeal,
    JudgmentCause,
    ReviewJudgment,
    ReviewScope,
    Schema,
    SpanPayload,
    Verdict,
    ideals_conflict,
)
from labelkit.store import Store


@dataclass
class ConsolidatedGroup:
    ideal: AnnotationIdeal
    event_count: int
    annotator_ids: list[str]
    judgment: ReviewJudgment | None


@dataclass
class ConsolidatedView:
    example_id: str
    seen: int  # submitted tasks on this example within scope
    groups: list[ConsolidatedGroup]
    conflicts: list[tuple[str, str]]


def consolidate(
    store: Store, job_id: str, example_id: str, scope: ReviewScope = ReviewScope.ALL
) -> ConsolidatedView:
    """All annotations on one example, grouped by ideal with agreement counts
    and the conflict pairs among them."""
    job = store.get_job(job_id)
    if store.example_dataset(example_id) != job.dataset_id:
        raise ExampleNotInJob(f"example {example_id} is not in job {job_id}")
    schema = store.get_schema(job.schema_id)

    seen = [a for a, kind in store.submitted_annotators(job_id, example_id) if scope.includes(kind)]
    supporters: dict[str, list[str]] = {}
    counts: dict[str, int] = {}
    for event, annotator_id, kind in store.events_for_example(job_id, example_id):
        if not scope.includes(kind):
            continue
        counts[event.ideal_id] = counts.get(event.ideal_id, 0) + 1
        supporters.setdefault(event.ideal_id, []).append(annotator_id)

    groups = [
        ConsolidatedGroup(
            ideal=store.get_ideal(ideal_id),
            event_count=counts[ideal_id],
            annotator_ids=sorted(set(supporters[ideal_id])),
            judgment=store.live_judgment(job_id, ideal_id),
        )
        for ideal_id in counts  # insertion order = first event order
    ]
    conflicts = [
        (a.ideal.id, b.ideal.id)
        for i, a in enumerate(groups)
        for b in groups[i + 1:]
        if ideals_conflict(a.ideal, b.ideal, schema)
    ]
    return ConsolidatedView(example_id, len(seen), groups, conflicts)


def _require_ideal_in_job(store: Store, job_id: str, ideal_id: str) -> AnnotationIdeal:
    ideal = store.get_ideal(ideal_id)
    if not store.ideal_has_events_in_job(job_id, ideal_id):
        raise UnknownIdeal(f"ideal {ideal_id} has no events in job {job_id}")
    return ideal


def _conflicting_ideals(
    store: Store, job_id: str, ideal: AnnotationIdeal, schema: Schema
) -> list[AnnotationIdeal]:
    """Conflicting ideals with events in the job, via indexed candidate lookup."""
    return [
        candidate
        for candidate in store.conflict_candidates(job_id, ideal)
        if ideals_conflict(ideal, candidate, schema)
    ]


def accept_ideal(
    store: Store,
    job_id: str,
    ideal_id: str,
    reviewer_id: str,
    *,
    cause: JudgmentCause = JudgmentCause.MANUAL,
) -> tuple[ReviewJudgment, list[ReviewJudgment]]:
    """Accept an ideal and transitively reject everything conflicting with it.

    Refuses with ConflictsWithAccepted when a conflicting ideal already holds
    an accepted judgment (the reviewer must reject that one first). The accept
    plus all transitive rejections commit atomically. Conflicting ideals that
    already carry a manual or batch rejection keep it; only unjudged ones
    receive a new transitive rejection.
    """
    with store.transaction():
        job = store.get_job(job_id)
        schema = store.get_schema(job.schema_id)
        ideal = _require_ideal_in_job(store, job_id, ideal_id)
        conflicting = _conflicting_ideals(store, job_id, ideal, schema)
        blockers = sorted(
            c.id
            for c in conflicting
            if (j := store.live_judgment(job_id, c.id)) is not None
            and j.verdict is Verdict.ACCEPTED
        )
        if blockers:
            raise ConflictsWithAccepted(ideal_id, blockers)
        judgment = store.set_live_judgment(
            job_id, ideal_id, reviewer_id, Verdict.ACCEPTED, cause
        )
        rejections = [
            store.set_live_judgment(
                job_id, c.id, reviewer_id, Verdict.REJECTED, JudgmentCause.TRANSITIVE,
                trigger_ideal_id=ideal_id,
            )
            for c in sorted(conflicting, key=lambda c: c.id)
            if store.live_judgment(job_id, c.id) is None
        ]
        return judgment, rejections


def reject_ideal(
    store: Store,
    job_id: str,
    ideal_id: str,
    reviewer_id: str,
    *,
    cause: JudgmentCause = JudgmentCause.MANUAL,
) -> ReviewJudgment:
    """Reject an ideal; no transitive effects.

    Rejecting an already-rejected ideal is idempotent. Rejecting an accepted
    ideal flips the verdict and revokes its transitive rejections: each victim
    is re-attributed to another still-accepted conflicting ideal if one
    exists, otherwise returns to unjudged.
    """
    with store.transaction():
        job = store.get_job(job_id)
        schema = store.get_schema(job.schema_id)
        _require_ideal_in_job(store, job_id, ideal_id)
        existing = store.live_judgment(job_id, ideal_id)
        if (
            existing is not None
            and existing.verdict is Verdict.REJECTED
            and existing.cause is cause
        ):
            return existing
        was_accepted = existing is not None and existing.verdict is Verdict.ACCEPTED
        judgment = store.set_live_judgment(job_id, ideal_id, reviewer_id, Verdict.REJECTED, cause)
        if was_accepted:
            _revoke_transitive(store, job_id, ideal_id, reviewer_id, schema)
        return judgment


def _revoke_transitive(
    store: Store, job_id: str, trigger_id: str, reviewer_id: str, schema: Schema
) -> None:
    for victim_judgment in store.judgments_triggered_by(job_id, trigger_id):
        victim = store.get_ideal(victim_judgment.ideal_id)
        accepted = []
        for candidate in _conflicting_ideals(store, job_id, victim, schema):
            cj = store.live_judgment(job_id, candidate.id)
            if cj is not None and cj.verdict is Verdict.ACCEPTED:
                accepted.append((cj.created_at, candidate.id))
        if accepted:  # earliest surviving accept adopts the rejection
            _, new_trigger = min(accepted)
            store.set_live_judgment(
                job_id, victim.id, reviewer_id, Verdict.REJECTED,
                JudgmentCause.TRANSITIVE, trigger_ideal_id=new_trigger,
            )
        else:
            store.revoke_judgment(job_id, victim.id)


def support_ratios(store: Store, job_id: str) -> dict[str, tuple[float, int]]:
    """Per ideal: (supporting annotators / annotators who saw its example,
    first event time). The denominator counts only annotators with a
    submitted task on that example."""
    ratios: dict[str, tuple[float, int]] = {}
    for example_id in store.job_example_ids(job_id):
        seen = store.submitted_annotators(job_id, example_id)
        if not seen:
            continue
        supporters: dict[str, set[str]] = {}
        first_event: dict[str, int] = {}
        for event, annotator_id, _kind in store.events_for_example(job_id, example_id):
            supporters.setdefault(event.ideal_id, set()).add(annotator_id)
            first_event.setdefault(event.ideal_id, event.created_at)
        for ideal_id, annotators in supporters.items():
            ratios[ideal_id] = (len(annotators) / len(seen), first_event[ideal_id])
    return ratios


def batch_accept_threshold(
    store: Store, job_id: str, threshold: float, reviewer_id: str
) -> int:
    """Accept every unjudged ideal whose support ratio meets the threshold.

    Candidates are processed in descending support order (ties broken by
    earliest first event, then ideal id), each via accept_ideal semantics, so
    when two conflicting ideals both qualify the better-supported one wins and
    transitively rejects the other. Returns the number accepted; rerunning
    without new submissions accepts nothing further.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    with store.transaction():
        store.get_job(job_id)
        judged = store.live_judgments(job_id)
        candidates = [
            (ratio, first_event, ideal_id)
            for ideal_id, (ratio, first_event) in support_ratios(store, job_id).items()
            if ideal_id not in judged and ratio >= threshold
        ]
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        accepted = 0
        for _ratio, _first, ideal_id in candidates:
            if store.live_judgment(job_id, ideal_id) is not None:
                continue  # transitively rejected earlier in this batch
            try:
                accept_ideal(store, job_id, ideal_id, reviewer_id,
                             cause=JudgmentCause.THRESHOLD_BATCH)
            except ConflictsWithAccepted:
                continue  # conflicts with a pre-existing accept; leave for manual review
            accepted += 1
        return accepted


@dataclass
class LexicalGroup:
    surface: str
    tag: str
    ideal_ids: list[str]
    event_count: int


def lexical_groups(
    store: Store, job_id: str, scope: ReviewScope = ReviewScope.ALL
) -> list[LexicalGroup]:
    """Span annotations grouped by (exact surface text, tag), ordered by event
    count descending — the Zipf head first."""
    store.get_job(job_id)
    contents: dict[str, str] = {}
    grouped: dict[tuple[str, str], tuple[set[str], int]] = {}
    for ideal in store.ideals_with_events(job_id, kind="span"):
        assert isinstance(ideal.payload, SpanPayload)
        count = sum(
            1
            for _event, _annotator, kind in store.events_for_ideal(job_id, ideal.id)
            if scope.includes(kind)
        )
        if count == 0:
            continue
        if ideal.example_id not in contents:
            contents[ideal.example_id] = store.get_example(ideal.example_id).content
        surface = contents[ideal.example_id][ideal.payload.start : ideal.payload.end]
        key = (surface, ideal.payload.tag)
        ids, total = grouped.get(key, (set(), 0))
        ids.add(ideal.id)
        grouped[key] = (ids, total + count)
    groups = [
        LexicalGroup(surface, tag, sorted(ids), count)
        for (surface, tag), (ids, count) in grouped.items()
    ]
    groups.sort(key=lambda g: (-g.event_count, g.surface, g.tag))
    return groups


def batch_review_lexical(
    store: Store,
    job_id: str,
    ideal_ids: list[str],
    verdict: Verdict,
    reviewer_id: str,
) -> list[ReviewJudgment]:
    """Apply one verdict to every ideal of a lexical group atomically.

    Accepts run full transitive-rejection semantics per ideal; if any member
    conflicts with an accepted ideal the whole batch rolls back and
    ConflictsWithAccepted names the offender.
    """
    with store.transaction():
        judgments: list[ReviewJudgment] = []
        for ideal_id in ideal_ids:
            if verdict is Verdict.ACCEPTED:
                judgment, rejections = accept_ideal(
                    store, job_id, ideal_id, reviewer_id, cause=JudgmentCause.LEXICAL_BATCH
                )
                judgments.append(judgment)
                judgments.extend(rejections)
            else:
                judgments.append(
                    reject_ideal(store, job_id, ideal_id, reviewer_id,
                                 cause=JudgmentCause.LEXICAL_BATCH)
                )
        return judgments
