"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
output; every tolerance and budget is asserted, not just printed.
"""

from __future__ import annotations

import random
import threading
import time

import pytest

from helpers import (
    SEARCH_WORDS,
    accepted_conflict_pairs,
    add_class_schema,
    add_dataset,
    add_ner_schema,
    add_team,
    brute_force_threshold_accepts,
    build_random_review_job,
    fleiss_kappa_reference,
    fullscan_conflicts,
    make_store,
    manual_job,
    naive_regex_scan,
    random_search_pattern,
    reset_judgments,
    run_annotation,
)
from labelkit import analytics, exports, review, scheduler
from labelkit.errors import ConflictsWithAccepted, RedundancyExceedsTeam
from labelkit.model import (
    Annotator,
    ClassPayload,
    Dataset,
    Example,
    SpanPayload,
    TaskState,
    Verdict,
    canonical_payload_json,
    canonicalize_payload,
)
from labelkit.trigram import build_index, evaluate, plan_query, search
from scenario import GOLDEN, run_scenario


def _ok(name: str) -> None:
    print(f"\nACCEPTANCE PASS: {name}")


def test_criterion_scheduler_invariants():
    """500 random (N<=200, K<=10, M<=K) plans: exactly M distinct annotators per
    example, load imbalance <= 1, M > K rejected; all inside 10 seconds."""
    started = time.monotonic()
    rng = random.Random(1234)
    for trial in range(500):
        n, k = rng.randint(1, 200), rng.randint(1, 10)
        m = rng.randint(1, k)
        examples = [f"e{i}" for i in range(n)]
        annotators = [f"a{i}" for i in range(k)]
        plan = scheduler.plan_assignments(examples, annotators, m, seed=trial)
        per_example: dict[str, set[str]] = {}
        per_annotator: dict[str, int] = {a: 0 for a in annotators}
        for example_id, annotator_id in plan:
            per_example.setdefault(example_id, set()).add(annotator_id)
            per_annotator[annotator_id] += 1
        assert len(plan) == n * m
        assert len(plan) == len(set(plan))
        assert all(len(s) == m for s in per_example.values()) and len(per_example) == n
        loads = list(per_annotator.values())
        assert max(loads) - min(loads) <= 1
        with pytest.raises(RedundancyExceedsTeam):
            scheduler.plan_assignments(examples, annotators, k + 1)
    elapsed = time.monotonic() - started
    assert elapsed < 10, f"scheduler criterion took {elapsed:.1f}s"
    _ok(f"scheduler invariants (500 instances in {elapsed:.2f}s)")


def test_criterion_ideal_interning():
    """10^4 randomized intern calls at ~50% duplicates leave exactly one row per
    distinct canonical payload; 100 concurrent interns of one payload converge."""
    store = make_store()
    content = "abcdefghijklmnopqrst" * 20  # no whitespace: canonical == raw
    add_dataset(store, [content])
    rng = random.Random(77)

    distinct: list[SpanPayload] = []
    seen = set()
    while len(distinct) < 5000:
        start = rng.randrange(0, len(content) - 1)
        end = rng.randrange(start + 1, min(start + 16, len(content)) + 1)
        payload = SpanPayload(start, end, rng.choice("XY"))
        key = canonical_payload_json(canonicalize_payload(content, payload))
        if key not in seen:
            seen.add(key)
            distinct.append(payload)
    calls = distinct + [rng.choice(distinct) for _ in range(5000)]  # 50% duplicates
    rng.shuffle(calls)
    assert len(calls) == 10_000
    for payload in calls:
        store.intern_ideal("ds-e0", payload)
    assert store.ideal_count() == len(distinct) == 5000

    results: list[str] = []

    def intern_one():
        ideal_id, _ = store.intern_ideal("ds-e0", SpanPayload(0, 5, "Z"))
        results.append(ideal_id)

    threads = [threading.Thread(target=intern_one) for _ in range(100)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1 and len(results) == 100
    assert store.ideal_count() == 5001
    store.close()
    _ok("ideal interning (10^4 replay + 100-way concurrency -> 1 row)")


def test_criterion_adjudication_safety():
    """10^3 random accept/reject/batch operations across random jobs: accepted
    ideals stay pairwise conflict-free, and every accept's transitive-rejection
    set equals the exhaustive full-scan oracle; all inside 30 seconds."""
    started = time.monotonic()
    total_ops = 0
    total_accepts = 0
    for seed in range(25):
        store, job = build_random_review_job(seed, n_examples=5, team_size=3)
        rng = random.Random(seed * 31 + 5)
        for _ in range(40):
            total_ops += 1
            ideals = store.ideals_with_events(job.id)
            if not ideals:
                break
            op = rng.random()
            if op < 0.45:
                target = rng.choice(ideals)
                before = store.live_judgments(job.id)
                conflicts = fullscan_conflicts(store, job.id, target.id)
                blocked = any(
                    before[i].verdict is Verdict.ACCEPTED for i in conflicts if i in before
                )
                try:
                    _, rejections = review.accept_ideal(store, job.id, target.id, "boss")
                except ConflictsWithAccepted:
                    assert blocked
                else:
                    assert not blocked
                    expected = {i for i in conflicts if i not in before}
                    assert {r.ideal_id for r in rejections} == expected
                    total_accepts += 1
            elif op < 0.75:
                review.reject_ideal(store, job.id, rng.choice(ideals).id, "boss")
            else:
                review.batch_accept_threshold(
                    store, job.id, rng.choice([0.5, 0.66, 1.0]), "boss"
                )
            assert accepted_conflict_pairs(store, job.id) == []
        assert store.check_integrity() == []
        store.close()
    elapsed = time.monotonic() - started
    assert total_ops == 1000
    assert total_accepts > 100  # the oracle comparison actually exercised
    assert elapsed < 30, f"adjudication criterion took {elapsed:.1f}s"
    _ok(f"adjudication safety (1000 ops, {total_accepts} oracle-checked accepts, {elapsed:.1f}s)")


def test_criterion_majority_vote():
    """Threshold batch-accept equals brute-force recomputation from the raw
    event log on 100 random jobs at thresholds 0.5, 0.66 and 1.0."""
    checked = 0
    for seed in range(100):
        store, job = build_random_review_job(seed, n_examples=4, team_size=3)
        for threshold in (0.5, 0.66, 1.0):
            expected = brute_force_threshold_accepts(store, job.id, threshold)
            review.batch_accept_threshold(store, job.id, threshold, "boss")
            got = {
                ideal_id
                for ideal_id, j in store.live_judgments(job.id).items()
                if j.verdict is Verdict.ACCEPTED
            }
            assert got == expected, (seed, threshold)
            checked += 1
            reset_judgments(store, job.id)
        store.close()
    assert checked == 300
    _ok("majority vote (100 jobs x 3 thresholds == brute force)")


def test_criterion_search_correctness():
    """On a 10^4-document corpus, 50 random regexes return results bit-identical
    to a naive scan, trigram candidates are supersets, and a selective 8+ char
    literal examines fewer than 10% of documents."""
    rng = random.Random(2718)
    examples = [
        Example(f"doc{i:05d}", " ".join(rng.choices(SEARCH_WORDS, k=rng.randint(4, 10))))
        for i in range(10_000)
    ]
    needle = "unmistakablephrase"
    needle_docs = set(rng.sample(range(10_000), 40))
    examples = [
        Example(e.id, f"{e.content} {needle}") if i in needle_docs else e
        for i, e in enumerate(examples)
    ]
    index = build_index(Dataset("corpus", "corpus", examples))

    for trial in range(50):
        pattern = random_search_pattern(rng)
        case_sensitive = trial % 2 == 0
        result = search(index, pattern, case_sensitive=case_sensitive)
        expected = naive_regex_scan(examples, pattern, case_sensitive)
        assert [(h.example_id, h.spans) for h in result.hits] == expected, pattern
        candidates = evaluate(index, plan_query(pattern))
        assert {doc for doc, _ in expected} <= candidates, pattern

    selective = search(index, needle)
    assert {h.example_id for h in selective.hits} == {f"doc{i:05d}" for i in needle_docs}
    assert selective.examined < 1000, f"examined {selective.examined} of 10000"
    _ok(
        "search correctness (50 regexes == naive scan; selective literal examined "
        f"{selective.examined}/10000 docs)"
    )


def test_criterion_seen_aware_analytics():
    """A newly injected annotator with zero shared examples changes no pairwise
    metric; Fleiss kappa matches an independent implementation to 1e-9; the
    perfect-agreement fixture yields exactly 1.0."""

    def build(with_loner: bool):
        store = make_store(9)
        add_dataset(store, [f"text number {i} body" for i in range(6)])
        schema = add_ner_schema(store, ("T",))
        team = add_team(store, 2)
        store.insert_annotator(Annotator("loner", "loner"))
        assignments = {"a1": ["ds-e0", "ds-e1", "ds-e2"], "a2": ["ds-e0", "ds-e1", "ds-e3"]}
        if with_loner:
            team.members.append("loner")
            assignments["loner"] = ["ds-e4", "ds-e5"]
        job = manual_job(store, schema.id, team, assignments)
        for annotator, examples in assignments.items():
            for example_id in examples:
                task = next(
                    t for t in store.tasks_for_job(job.id)
                    if t.annotator_id == annotator and t.example_id == example_id
                )
                store.set_task_state(task.id, TaskState.LEASED)
                payloads = (
                    [SpanPayload(0, 4, "T")] if annotator != "loner" else [SpanPayload(5, 11, "T")]
                )
                scheduler.submit_task(store, task.id, annotator, payloads)
        return store, job

    base_store, base_job = build(with_loner=False)
    base = analytics.pairwise_span_agreement(base_store, base_job.id, "a1", "a2")
    injected_store, injected_job = build(with_loner=True)
    after = analytics.pairwise_span_agreement(injected_store, injected_job.id, "a1", "a2")
    assert base == after
    assert analytics.pairwise_span_agreement(injected_store, injected_job.id, "a1", "loner") is None
    base_store.close()
    injected_store.close()

    # Fleiss fixture vs the independent statsmodels implementation
    store = make_store(11)
    rng = random.Random(10)
    labels = {
        (a, f"ds-e{i}"): rng.choice(["Y", "W", "Z"])
        for a in ("a1", "a2", "a3") for i in range(10)
    }
    add_dataset(store, [f"item {i}" for i in range(10)])
    schema = add_class_schema(store, ("Y", "W", "Z"))
    team = add_team(store, 3)
    job = scheduler.create_job(store, "ds", schema.id, team.id, 3)
    for member in team.members:
        run_annotation(store, job, member,
                       lambda ex, m=member: [ClassPayload(labels[(m, ex)])])
    result = analytics.classification_agreement(store, job.id)
    categories = sorted(set(labels.values()))
    table = []
    for i in range(10):
        row = [0] * len(categories)
        for a in ("a1", "a2", "a3"):
            row[categories.index(labels[(a, f"ds-e{i}")])] += 1
        table.append(row)
    reference = fleiss_kappa_reference(table)
    assert result.kappa == pytest.approx(reference, abs=1e-9)

    # perfect agreement fixture: exactly 1.0, no tolerance
    perfect_store = make_store(12)
    add_dataset(perfect_store, [f"item {i}" for i in range(5)])
    schema = add_class_schema(perfect_store, ("Y", "W"))
    team = add_team(perfect_store, 3)
    perfect_job = scheduler.create_job(perfect_store, "ds", schema.id, team.id, 3)
    for member in team.members:
        run_annotation(perfect_store, perfect_job, member,
                       lambda ex: [ClassPayload("Y" if ex.endswith(("0", "1", "2")) else "W")])
    perfect = analytics.classification_agreement(perfect_store, perfect_job.id)
    assert perfect.percent_agreement == 1.0
    assert perfect.kappa == 1.0
    store.close()
    perfect_store.close()
    _ok(f"seen-aware analytics (injection invariant; kappa == reference to 1e-9: {result.kappa:.9f})")


def test_criterion_end_to_end_golden_export():
    """The scripted upload -> job -> pre-annotate -> annotate -> review -> export
    scenario reproduces the checked-in golden JSONL byte for byte, and an
    export/wipe/import/export roundtrip is byte-identical."""
    data, store, job_id = run_scenario()
    assert GOLDEN.exists(), "golden file missing; run `python3 tests/scenario.py`"
    assert data == GOLDEN.read_bytes()

    store.wipe_annotations(job_id)
    exports.import_annotations(store, job_id, data.decode("utf-8").splitlines())
    assert exports.export_bytes(store, job_id) == data
    assert store.check_integrity() == []
    store.close()
    _ok(f"end-to-end golden export ({len(data)} bytes) + roundtrip byte-identical")


def test_criterion_atomicity_fault_injection(monkeypatch):
    """Failures injected mid-submit and mid-batch-accept leave storage exactly
    at the pre-call state."""

    def snapshot(store, job_id):
        return (
            exports.export_bytes(store, job_id),
            {i: (j.verdict, j.cause) for i, j in store.live_judgments(job_id).items()},
            store.ideal_count(),
            tuple((t.id, t.state) for t in store.tasks_for_job(job_id)),
        )

    # mid-submit
    store = make_store(21)
    add_dataset(store, ["alpha beta gamma delta epsilon"])
    schema = add_ner_schema(store, ("T",))
    team = add_team(store, 1)
    job = scheduler.create_job(store, "ds", schema.id, team.id, 1)
    task = scheduler.next_task(store, job.id, "a1")
    before = snapshot(store, job.id)
    original = store.record_event
    calls = {"n": 0}

    def flaky_record(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("injected mid-submit failure")
        return original(*args, **kwargs)

    monkeypatch.setattr(store, "record_event", flaky_record)
    with pytest.raises(RuntimeError):
        scheduler.submit_task(
            store, task.id, "a1",
            [SpanPayload(0, 5, "T"), SpanPayload(6, 10, "T"), SpanPayload(11, 16, "T")],
        )
    monkeypatch.setattr(store, "record_event", original)
    assert snapshot(store, job.id) == before
    store.close()

    # mid-batch-accept
    store, job = build_random_review_job(33, n_examples=5, team_size=3)
    before = snapshot(store, job.id)
    original_set = store.set_live_judgment
    calls = {"n": 0}

    def flaky_judgment(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 3:
            raise RuntimeError("injected mid-batch failure")
        return original_set(*args, **kwargs)

    monkeypatch.setattr(store, "set_live_judgment", flaky_judgment)
    with pytest.raises(RuntimeError):
        review.batch_accept_threshold(store, job.id, 0.3, "boss")
    monkeypatch.setattr(store, "set_live_judgment", original_set)
    assert calls["n"] == 3, "the batch must have been mid-flight when it failed"
    assert snapshot(store, job.id) == before
    store.close()
    _ok("atomicity under fault injection (mid-submit and mid-batch-accept)")
