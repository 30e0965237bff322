"""Seen-aware agreement, accuracy against reviewed gold, and progress metrics.

Every denominator is derived from the task table, never from events: an
annotator "saw" an example iff they have a submitted task on it, so an empty
submission still counts as a deliberate negative judgment. Annotators who
share no examples therefore never influence each other's metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from labelkit.errors import NoGold, WrongJobKind
from labelkit.model import ClassificationMode, TaskState, Verdict
from labelkit.store import Store

_NO_LABEL = "(none)"  # a rater who saw the example but asserted no class


def seen_matrix(store: Store, job_id: str) -> dict[str, set[str]]:
    """annotator id -> examples with a submitted task in this job."""
    store.get_job(job_id)
    rows: dict[str, set[str]] = {}
    for annotator_id, example_id in store.submitted_pairs(job_id):
        rows.setdefault(annotator_id, set()).add(example_id)
    return rows


def pairwise_span_agreement(store: Store, job_id: str, a: str, b: str) -> float | None:
    """Exact-match span F1 between two annotators over co-seen examples.

        F1 = 2 * |matches| / (|A| + |B|)

    where a match is the identical span ideal asserted by both. None when the
    annotators share no examples; 1.0 when both asserted nothing on their
    shared examples.
    """
    seen = seen_matrix(store, job_id)
    co_seen = seen.get(a, set()) & seen.get(b, set())
    if not co_seen:
        return None
    ideals_a: set[str] = set()
    ideals_b: set[str] = set()
    for ideal_id, example_id, annotator_id, _class_id, _t in store.assertion_rows(job_id, "span"):
        if example_id not in co_seen:
            continue
        if annotator_id == a:
            ideals_a.add(ideal_id)
        elif annotator_id == b:
            ideals_b.add(ideal_id)
    denominator = len(ideals_a) + len(ideals_b)
    if denominator == 0:
        return 1.0
    return 2 * len(ideals_a & ideals_b) / denominator


def fleiss_kappa(table: list[list[int]]) -> float:
    """Fleiss' kappa for an items x categories count matrix with a constant
    number of ratings n per item.

        P_i  = (sum_j n_ij^2 - n) / (n (n - 1))
        p_j  = sum_i n_ij / (N n)
        kappa = (mean(P_i) - sum_j p_j^2) / (1 - sum_j p_j^2)

    Returns 1.0 at the degenerate ceiling where expected agreement is 1.
    """
    n = sum(table[0])
    if n < 2 or any(sum(row) != n for row in table):
        raise ValueError("each item needs the same number of ratings, at least 2")
    big_n = len(table)
    p_observed = sum(
        (sum(c * c for c in row) - n) / (n * (n - 1)) for row in table
    ) / big_n
    totals = [sum(row[j] for row in table) for j in range(len(table[0]))]
    p_expected = sum((t / (big_n * n)) ** 2 for t in totals)
    if p_expected == 1.0:
        return 1.0
    return (p_observed - p_expected) / (1 - p_expected)


@dataclass
class ClassificationAgreement:
    percent_agreement: float | None
    kappa: float | None  # set when all multi-rater examples share one rater count
    kappa_by_rater_count: dict[int, float] = field(default_factory=dict)


def classification_agreement(store: Store, job_id: str) -> ClassificationAgreement:
    """Percent agreement and Fleiss' kappa over examples seen by >= 2 raters.

    A rater's label for an example is their earliest asserted class, or a
    "no class" sentinel when they submitted without one. Kappa requires equal
    rater counts, so examples are stratified by how many annotators saw them
    and kappa is reported per stratum; the top-level kappa is set when there
    is a single stratum.
    """
    job = store.get_job(job_id)
    schema = store.get_schema(job.schema_id)
    if schema.classification_mode is not ClassificationMode.SINGLE_LABEL or not schema.classes:
        raise WrongJobKind("classification agreement requires a single-label job")

    labels: dict[tuple[str, str], str] = {}  # (example, annotator) -> class
    for _ideal, example_id, annotator_id, class_id, _t in store.assertion_rows(job_id, "class"):
        labels.setdefault((example_id, annotator_id), class_id)  # earliest event wins

    raters_per_example: dict[str, list[str]] = {}
    for annotator_id, examples in seen_matrix(store, job_id).items():
        for example_id in examples:
            raters_per_example.setdefault(example_id, []).append(annotator_id)
    multi = {ex: sorted(raters) for ex, raters in raters_per_example.items() if len(raters) >= 2}
    if not multi:
        return ClassificationAgreement(None, None)

    def label(example_id: str, annotator_id: str) -> str:
        return labels.get((example_id, annotator_id), _NO_LABEL)

    agreement_sum = 0.0
    for example_id, raters in multi.items():
        pairs = [
            (x, y) for i, x in enumerate(raters) for y in raters[i + 1:]
        ]
        equal = sum(1 for x, y in pairs if label(example_id, x) == label(example_id, y))
        agreement_sum += equal / len(pairs)
    percent = agreement_sum / len(multi)

    categories = sorted({label(ex, r) for ex, raters in multi.items() for r in raters})
    column = {c: j for j, c in enumerate(categories)}
    strata: dict[int, list[list[int]]] = {}
    for example_id, raters in sorted(multi.items()):
        row = [0] * len(categories)
        for rater in raters:
            row[column[label(example_id, rater)]] += 1
        strata.setdefault(len(raters), []).append(row)
    per_stratum = {n: fleiss_kappa(rows) for n, rows in sorted(strata.items())}
    kappa = next(iter(per_stratum.values())) if len(per_stratum) == 1 else None
    return ClassificationAgreement(percent, kappa, per_stratum)


@dataclass
class PrecisionRecall:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float | None
    recall: float | None
    f1: float | None


def precision_recall(store: Store, job_id: str, source_id: str) -> PrecisionRecall:
    """Source accuracy against reviewed gold over the examples it saw.

    TP: source ideals accepted; FP: source ideals rejected (including
    transitively); FN: accepted ideals on seen examples the source never
    asserted. Unjudged ideals are excluded from every count. Raises NoGold
    until the job has at least one accepted ideal.
    """
    store.get_job(job_id)
    judgments = store.live_judgments(job_id)
    accepted_ideals = {i for i, j in judgments.items() if j.verdict is Verdict.ACCEPTED}
    if not accepted_ideals:
        raise NoGold(f"job {job_id} has no accepted ideals")
    seen = seen_matrix(store, job_id).get(source_id, set())

    source_ideals: set[str] = set()
    ideal_examples: dict[str, str] = {}
    for ideal_id, example_id, annotator_id, _class_id, _t in store.assertion_rows(job_id):
        ideal_examples[ideal_id] = example_id
        if annotator_id == source_id and example_id in seen:
            source_ideals.add(ideal_id)

    tp = len(source_ideals & accepted_ideals)
    fp = sum(
        1
        for ideal_id in source_ideals
        if ideal_id in judgments and judgments[ideal_id].verdict is Verdict.REJECTED
    )
    fn = sum(
        1
        for ideal_id in accepted_ideals
        if ideal_examples.get(ideal_id) in seen and ideal_id not in source_ideals
    )
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is None or recall is None:
        f1 = None
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return PrecisionRecall(tp, fp, fn, precision, recall, f1)


@dataclass
class ProgressReport:
    tasks_total: int
    tasks_submitted: int
    submitted_by_annotator: dict[str, int]
    events_in_window: int
    events_per_hour: float
    window_minutes: int


def progress(store: Store, job_id: str, *, window_minutes: int = 60) -> ProgressReport:
    """Submission progress plus event throughput over a trailing window."""
    store.get_job(job_id)
    tasks = store.tasks_for_job(job_id)
    submitted = [t for t in tasks if t.state is TaskState.SUBMITTED]
    by_annotator: dict[str, int] = {}
    for task in submitted:
        by_annotator[task.annotator_id] = by_annotator.get(task.annotator_id, 0) + 1
    since = store.now() - window_minutes * 60_000
    recent = store.count_events_since(job_id, since)
    return ProgressReport(
        tasks_total=len(tasks),
        tasks_submitted=len(submitted),
        submitted_by_annotator=by_annotator,
        events_in_window=recent,
        events_per_hour=recent * 60.0 / window_minutes,
        window_minutes=window_minutes,
    )
