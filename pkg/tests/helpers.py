"""Shared builders, deterministic wiring, and independent oracles for tests."""

from __future__ import annotations

import random
import re
import uuid

from labelkit import model
from labelkit.model import (
    Annotator,
    AnnotatorKind,
    ClassificationMode,
    Dataset,
    EntityTag,
    Example,
    Schema,
    Team,
    Verdict,
    ideals_conflict,
)
from labelkit.store import Store


class FakeClock:
    """Monotonic millisecond clock ticking once per call."""

    def __init__(self, start: int = 1_700_000_000_000):
        self.t = start

    def __call__(self) -> int:
        self.t += 1
        return self.t


def seeded_ids(seed: int = 0):
    rng = random.Random(seed)

    def make() -> str:
        return str(uuid.UUID(int=rng.getrandbits(128), version=4))

    return make


def make_store(seed: int = 0) -> Store:
    return Store(id_factory=seeded_ids(seed), clock=FakeClock())


def add_dataset(store: Store, contents: list[str], name: str = "ds") -> Dataset:
    dataset = Dataset(
        name, name,
        [Example(f"{name}-e{i}", text, {}) for i, text in enumerate(contents)],
    )
    store.insert_dataset(dataset)
    return dataset


def add_ner_schema(store: Store, tags: tuple[str, ...] = ("PLACE", "ORG")) -> Schema:
    schema = Schema(
        store.new_id(), "ner",
        entity_tags=[EntityTag(t, t.title()) for t in tags],
        relation_types=["part-of"],
        allows_nonterminals=True,
    )
    store.insert_schema(schema)
    return schema


def add_class_schema(
    store: Store,
    classes: tuple[str, ...] = ("Y", "W"),
    mode: ClassificationMode = ClassificationMode.SINGLE_LABEL,
) -> Schema:
    schema = Schema(store.new_id(), "cls", classes=list(classes), classification_mode=mode)
    store.insert_schema(schema)
    return schema


def add_team(store: Store, size: int = 3, prefix: str = "a", model_ids: tuple[str, ...] = ()) -> Team:
    members = []
    for i in range(size):
        annotator_id = f"{prefix}{i + 1}"
        store.insert_annotator(Annotator(annotator_id, annotator_id))
        members.append(annotator_id)
    for model_id in model_ids:
        store.insert_annotator(Annotator(model_id, model_id, AnnotatorKind.MODEL))
        members.append(model_id)
    team = Team(store.new_id(), "team", members)
    store.insert_team(team)
    return team


SEARCH_WORDS = [
    "foreign", "policy", "register", "federal", "notice", "agency", "rule",
    "白宮", "café", "naïve", "White", "House", "ACME", "Corp", "podcast",
    "brand", "sponsor", "episode", "統計", "foo", "bar", "baz",
]


def random_search_pattern(rng: random.Random) -> str:
    """Regex drawn from the shapes the planner must handle, over SEARCH_WORDS."""
    literal = lambda: re.escape(rng.choice(SEARCH_WORDS))
    choices = [
        literal,
        lambda: literal() + " " + literal(),
        lambda: f"{literal()}|{literal()}",
        lambda: f"({literal()}|{literal()}) {literal()}",
        lambda: literal() + r"\s+" + literal(),
        lambda: literal()[:2],  # short literal: forces ANY
        lambda: f"{literal()}.{literal()}",
        lambda: f"[a-m]{literal()}?",
        lambda: f"{literal()}+",
        lambda: f"^{literal()}",
    ]
    return rng.choice(choices)()


def manual_job(store: Store, schema_id: str, team: Team,
               assignments: dict[str, list[str]], dataset_id: str = "ds"):
    """Job whose task set is laid out explicitly, bypassing the planner —
    used to construct precise seen matrices."""
    from labelkit.model import Job, Task

    job = Job(store.new_id(), dataset_id, schema_id, team.id, redundancy=len(team.members))
    store.insert_job(job)
    tasks = [
        Task(store.new_id(), job.id, annotator_id, example_id)
        for annotator_id, example_ids in assignments.items()
        for example_id in example_ids
    ]
    store.insert_tasks(tasks)
    store.init_job_examples(job.id, store.dataset_example_ids(dataset_id))
    return job


def run_annotation(store, job, annotator_id: str, payload_fn) -> None:
    """Lease and submit every task of one annotator; payload_fn(example_id) -> payloads."""
    from labelkit import scheduler

    while (task := scheduler.next_task(store, job.id, annotator_id)) is not None:
        scheduler.submit_task(store, task.id, annotator_id, payload_fn(task.example_id))


def reset_judgments(store: Store, job_id: str) -> None:
    """Drop every judgment of a job, returning it to the unreviewed state."""
    with store.transaction() as conn:
        conn.execute("DELETE FROM judgments WHERE job_id = ?", (job_id,))


def build_random_review_job(seed: int, n_examples: int = 6, team_size: int = 3):
    """A job with randomized span/class submissions; deterministic per seed.

    Returns (store, job). Contents are long enough that random spans overlap
    often, which is what adjudication stress needs.
    """
    rng = random.Random(seed)
    store = make_store(seed)
    contents = [
        " ".join(rng.choice(["alpha", "beta", "gamma", "delta"]) for _ in range(6))
        for _ in range(n_examples)
    ]
    add_dataset(store, contents)
    schema = Schema(
        "sch", "mixed",
        entity_tags=[EntityTag(t, t) for t in ("PLACE", "ORG", "BRAND")],
        classes=["c1", "c2", "c3"],
        classification_mode=rng.choice(list(ClassificationMode)),
    )
    store.insert_schema(schema)
    team = add_team(store, team_size)
    from labelkit import scheduler

    job = scheduler.create_job(store, "ds", schema.id, team.id, team_size, seed=seed)

    def payloads_for(example_id: str):
        content = store.get_example(example_id).content
        out = []
        for _ in range(rng.randint(0, 4)):
            if rng.random() < 0.7:
                start = rng.randrange(0, len(content) - 2)
                end = min(len(content), start + rng.randint(1, 9))
                if content[start:end].strip():
                    out.append(model.SpanPayload(start, end, rng.choice(["PLACE", "ORG", "BRAND"])))
            else:
                out.append(model.ClassPayload(rng.choice(["c1", "c2", "c3"])))
        return out

    for member in team.members:
        run_annotation(store, job, member, payloads_for)
    return store, job


# ---------------------------------------------------------------------------
# Oracles (independent of the implementations they check)


def naive_regex_scan(
    examples: list[Example], pattern: str, case_sensitive: bool = True
) -> list[tuple[str, tuple[tuple[int, int], ...]]]:
    """Reference search: run the regex over every document, in upload order."""
    rx = re.compile(pattern, 0 if case_sensitive else re.IGNORECASE)
    out = []
    for example in examples:
        spans = tuple((m.start(), m.end()) for m in rx.finditer(example.content))
        if spans:
            out.append((example.id, spans))
    return out


def fullscan_conflicts(store: Store, job_id: str, ideal_id: str) -> set[str]:
    """All ideals with events in the job conflicting with `ideal_id`, by
    exhaustive pairwise scan (no index involved)."""
    job = store.get_job(job_id)
    schema = store.get_schema(job.schema_id)
    target = store.get_ideal(ideal_id)
    return {
        other.id
        for other in store.ideals_with_events(job_id)
        if other.id != ideal_id and ideals_conflict(target, other, schema)
    }


def accepted_conflict_pairs(store: Store, job_id: str) -> list[tuple[str, str]]:
    """Pairs of accepted ideals that conflict — must always be empty."""
    job = store.get_job(job_id)
    schema = store.get_schema(job.schema_id)
    accepted = [
        store.get_ideal(ideal_id)
        for ideal_id, judgment in store.live_judgments(job_id).items()
        if judgment.verdict is Verdict.ACCEPTED
    ]
    return [
        (a.id, b.id)
        for i, a in enumerate(accepted)
        for b in accepted[i + 1:]
        if ideals_conflict(a, b, schema)
    ]


def brute_force_threshold_accepts(store: Store, job_id: str, threshold: float) -> set[str]:
    """Recompute, straight from the raw event and task tables, which ideals a
    threshold batch-accept starting from a judgment-free state must accept."""
    job = store.get_job(job_id)
    schema = store.get_schema(job.schema_id)
    per_example: dict[str, list] = {}
    ratio: dict[str, float] = {}
    first_event: dict[str, int] = {}
    for example_id in store.job_example_ids(job_id):
        seen = store.submitted_annotators(job_id, example_id)
        if not seen:
            continue
        supporters: dict[str, set[str]] = {}
        for event, annotator_id, _kind in store.events_for_example(job_id, example_id):
            supporters.setdefault(event.ideal_id, set()).add(annotator_id)
            first_event.setdefault(event.ideal_id, event.created_at)
        for ideal_id, annotators in supporters.items():
            ratio[ideal_id] = len(annotators) / len(seen)
            per_example.setdefault(example_id, []).append(ideal_id)

    candidates = sorted(
        (i for i, r in ratio.items() if r >= threshold),
        key=lambda i: (-ratio[i], first_event[i], i),
    )
    accepted: set[str] = set()
    rejected: set[str] = set()
    for ideal_id in candidates:
        if ideal_id in rejected:
            continue
        ideal = store.get_ideal(ideal_id)
        if any(
            ideals_conflict(ideal, store.get_ideal(other), schema) for other in accepted
        ):
            continue  # blocked by an accept earlier in the ordering
        accepted.add(ideal_id)
        for other in store.ideals_with_events(job_id, ideal.example_id):
            if other.id != ideal_id and ideals_conflict(ideal, other, schema):
                rejected.add(other.id)
    return accepted


def fleiss_kappa_reference(table: list[list[int]]) -> float:
    """Independent Fleiss' kappa via statsmodels."""
    from statsmodels.stats.inter_rater import fleiss_kappa as sm_fleiss

    return float(sm_fleiss(table, method="fleiss"))
