"""Work distribution: redundant task planning, atomic leasing, and submission.

Each example in a job is assigned to exactly M distinct annotators out of a
team of K, with per-annotator load differing by at most one. Leasing and
submission are transactional: no task is ever handed to two callers, and a
failed submission leaves no partial events behind.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from labelkit.errors import InvalidPayload, NotTeamMember, RedundancyExceedsTeam, TaskNotLeased
from labelkit.model import (
    EventSource,
    Job,
    JobState,
    Payload,
    PreAnnotationState,
    Task,
    TaskState,
    ideals_conflict,
    validate_payload,
)
from labelkit.store import Store


@dataclass
class TaskPlan:
    job_id: str
    assignments: list[tuple[str, str]]  # (example_id, annotator_id)
    priorities: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class SubmissionReceipt:
    task_id: str
    event_ids: tuple[str, ...]
    ideal_ids: tuple[str, ...]
    accepted_preannotation_ids: tuple[str, ...]


def plan_assignments(
    example_ids: list[str], annotator_ids: list[str], redundancy: int, *, seed: int = 0
) -> list[tuple[str, str]]:
    """Assign each example to exactly `redundancy` distinct annotators.

    Examples are visited in a seeded shuffle and annotators dealt round-robin,
    which keeps per-annotator loads within one of each other. Deterministic
    for a given seed.
    """
    k = len(annotator_ids)
    if not 1 <= redundancy <= k:
        raise RedundancyExceedsTeam(f"redundancy {redundancy} exceeds team size {k}")
    order = list(example_ids)
    random.Random(seed).shuffle(order)
    assignments = []
    cursor = 0
    for example_id in order:
        for j in range(redundancy):
            assignments.append((example_id, annotator_ids[(cursor + j) % k]))
        cursor = (cursor + redundancy) % k
    return assignments


def create_job(
    store: Store,
    dataset_id: str,
    schema_id: str,
    team_id: str,
    redundancy: int,
    *,
    seed: int = 0,
) -> Job:
    """Create a job and materialize its task plan (all tasks pending, priority 0)."""
    with store.transaction():
        example_ids = store.dataset_example_ids(dataset_id)
        store.get_schema(schema_id)
        team = store.get_team(team_id)
        assignments = plan_assignments(example_ids, team.members, redundancy, seed=seed)
        job = Job(store.new_id(), dataset_id, schema_id, team_id, redundancy)
        store.insert_job(job)
        store.insert_tasks(
            [Task(store.new_id(), job.id, annotator, example) for example, annotator in assignments]
        )
        store.init_job_examples(job.id, example_ids)
        return job


def next_task(store: Store, job_id: str, annotator_id: str) -> Task | None:
    """Lease the highest-priority pending task for this annotator, or None.

    Priority ties break by example upload order. The select-and-lease happens
    in one transaction, so no task is returned twice.
    """
    with store.transaction():
        job = store.get_job(job_id)
        team = store.get_team(job.team_id)
        if annotator_id not in team.members:
            raise NotTeamMember(f"{annotator_id} is not on team {team.id}")
        task = store.next_pending_task(job_id, annotator_id)
        if task is None:
            return None
        store.set_task_state(task.id, TaskState.LEASED)
        return Task(task.id, task.job_id, task.annotator_id, task.example_id, TaskState.LEASED)


def revoke_lease(store: Store, task_id: str) -> Task:
    """Manager action: return a leased task to the pending pool."""
    with store.transaction():
        task = store.get_task(task_id)
        if task.state is not TaskState.LEASED:
            raise TaskNotLeased(f"task {task_id} is {task.state.value}, not leased")
        store.set_task_state(task_id, TaskState.PENDING)
        return Task(task.id, task.job_id, task.annotator_id, task.example_id, TaskState.PENDING)


def submit_task(
    store: Store,
    task_id: str,
    annotator_id: str,
    payloads: list[Payload],
    accepted_preannotations: list[str] = (),
    rejected_preannotations: list[str] = (),
) -> SubmissionReceipt:
    """Submit a leased task: intern payloads, record one event per distinct
    ideal, resolve pre-annotation verdicts, and freeze the task.

    The whole submission is one transaction; any invalid payload or
    pre-annotation reference rolls everything back. An empty submission is a
    legal "nothing to annotate here" judgment. Duplicate payloads within one
    submission collapse to a single event.
    """
    with store.transaction():
        task = store.get_task(task_id)
        if task.state is not TaskState.LEASED or task.annotator_id != annotator_id:
            raise TaskNotLeased(f"task {task_id} is not leased by {annotator_id}")
        job = store.get_job(task.job_id)
        schema = store.get_schema(job.schema_id)
        example = store.get_example(task.example_id)

        event_ids: list[str] = []
        ideal_ids: list[str] = []
        seen: set[str] = set()
        for payload in payloads:
            canonical = validate_payload(
                example, payload, schema, span_ideal_ids=store.span_ideal_ids(example.id)
            )
            ideal_id, _ = store.intern_ideal(example.id, canonical)
            if ideal_id in seen:
                continue
            seen.add(ideal_id)
            ideal_ids.append(ideal_id)
            event = store.record_event(ideal_id, task_id, EventSource.ANNOTATOR)
            if event is not None:
                event_ids.append(event.id)

        accepted: list[str] = []
        for pre_id in accepted_preannotations:
            pre = store.get_preannotation(pre_id)
            if pre is None or pre.job_id != task.job_id:
                raise InvalidPayload(f"pre-annotation {pre_id} not found in job {task.job_id}")
            ideal = store.get_ideal(pre.ideal_id)
            if ideal.example_id != task.example_id:
                raise InvalidPayload(f"pre-annotation {pre_id} is not on this task's example")
            store.set_preannotation_state(pre_id, PreAnnotationState.ACCEPTED)
            accepted.append(pre_id)
            if pre.ideal_id in seen:
                continue
            seen.add(pre.ideal_id)
            event = store.record_event(pre.ideal_id, task_id, EventSource.PRE_ANNOTATION_ACCEPT)
            if event is not None:
                event_ids.append(event.id)

        for pre_id in rejected_preannotations:
            pre = store.get_preannotation(pre_id)
            if pre is None or pre.job_id != task.job_id:
                raise InvalidPayload(f"pre-annotation {pre_id} not found in job {task.job_id}")
            # an acceptance by any annotator is sticky; only pending ones flip
            if pre.state is PreAnnotationState.PENDING:
                store.set_preannotation_state(pre_id, PreAnnotationState.REJECTED)

        store.set_task_state(task_id, TaskState.SUBMITTED)
        return SubmissionReceipt(task_id, tuple(event_ids), tuple(ideal_ids), tuple(accepted))


def reprioritize_by_agreement(store: Store, job_id: str) -> dict[str, int]:
    """Boost examples whose submitted ideals contain at least one conflict.

    Effective priority is recomputed as base + 1 for conflicted examples and
    base otherwise, so rerunning without new submissions is idempotent.
    """
    with store.transaction():
        job = store.get_job(job_id)
        if job.state is not JobState.OPEN:
            return store.get_priorities(job_id)
        schema = store.get_schema(job.schema_id)
        bases = store.get_base_priorities(job_id)
        priorities: dict[str, int] = {}
        for example_id in store.job_example_ids(job_id):
            ideals = store.ideals_with_events(job_id, example_id)
            conflicted = any(
                ideals_conflict(a, b, schema)
                for i, a in enumerate(ideals)
                for b in ideals[i + 1:]
            )
            priority = bases[example_id] + (1 if conflicted else 0)
            store.set_priority(job_id, example_id, priority)
            priorities[example_id] = priority
        return priorities
