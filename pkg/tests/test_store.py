from __future__ import annotations

import random
import threading

import pytest

from helpers import add_dataset, add_ner_schema, add_team, make_store
from labelkit import scheduler
from labelkit.errors import MalformedDataset, UnknownExample
from labelkit.model import (
    ClassPayload,
    ContextConfig,
    Dataset,
    Example,
    SpanPayload,
    TaskState,
)


class TestInterning:
    def test_identical_payloads_intern_to_one_id(self, store):
        add_dataset(store, ["some text here"])
        first, created1 = store.intern_ideal("ds-e0", SpanPayload(0, 4, "T"))
        second, created2 = store.intern_ideal("ds-e0", SpanPayload(0, 4, "T"))
        assert first == second
        assert created1 and not created2

    def test_distinct_payloads_get_distinct_ids(self, store):
        add_dataset(store, ["some text here"])
        a, _ = store.intern_ideal("ds-e0", SpanPayload(0, 4, "T"))
        b, _ = store.intern_ideal("ds-e0", SpanPayload(0, 5, "T"))
        assert a != b

    def test_same_payload_different_example_distinct(self, store):
        add_dataset(store, ["some text", "more text"])
        a, _ = store.intern_ideal("ds-e0", ClassPayload("Y"))
        b, _ = store.intern_ideal("ds-e1", ClassPayload("Y"))
        assert a != b

    def test_unknown_example_rejected(self, store):
        with pytest.raises(UnknownExample):
            store.intern_ideal("nope", ClassPayload("Y"))

    def test_concurrent_interns_converge_to_one_row(self, store):
        add_dataset(store, ["shared example content"])
        results: list[str] = []

        def intern():
            ideal_id, _ = store.intern_ideal("ds-e0", SpanPayload(0, 6, "T"))
            results.append(ideal_id)

        threads = [threading.Thread(target=intern) for _ in range(100)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(results) == 100
        assert len(set(results)) == 1
        assert store.ideal_count() == 1

    def test_randomized_replay_matches_distinct_payloads(self, store):
        # interning is a function: stored rows == distinct canonical payloads
        add_dataset(store, ["0123456789" * 4])
        rng = random.Random(42)
        issued = set()
        for _ in range(2000):
            start = rng.randrange(0, 39)
            end = rng.randrange(start + 1, 41)
            payload = SpanPayload(start, end, rng.choice("AB"))
            store.intern_ideal("ds-e0", payload)
            issued.add((payload.start, payload.end, payload.tag))
        assert store.ideal_count() == len(issued)


class TestTransactions:
    def test_rollback_on_error(self, store):
        add_dataset(store, ["content"])
        with pytest.raises(RuntimeError):
            with store.transaction():
                store.intern_ideal("ds-e0", SpanPayload(0, 7, "T"))
                raise RuntimeError("boom")
        assert store.ideal_count() == 0

    def test_nested_savepoint_rolls_back_inner_only(self, store):
        add_dataset(store, ["content"])
        with store.transaction():
            store.intern_ideal("ds-e0", SpanPayload(0, 7, "T"))
            try:
                with store.transaction():
                    store.intern_ideal("ds-e0", SpanPayload(0, 3, "T"))
                    raise RuntimeError("inner")
            except RuntimeError:
                pass
        assert store.ideal_count() == 1

    def test_judgment_live_flag_keeps_trail(self, store):
        from labelkit.model import JudgmentCause, Verdict

        add_dataset(store, ["content"])
        schema = add_ner_schema(store)
        team = add_team(store, 1)
        job = scheduler.create_job(store, "ds", schema.id, team.id, 1)
        ideal_id, _ = store.intern_ideal("ds-e0", SpanPayload(0, 7, "PLACE"))
        store.set_live_judgment(job.id, ideal_id, "r", Verdict.ACCEPTED, JudgmentCause.MANUAL)
        store.set_live_judgment(job.id, ideal_id, "r", Verdict.REJECTED, JudgmentCause.MANUAL)
        live = store.live_judgment(job.id, ideal_id)
        assert live is not None and live.verdict is Verdict.REJECTED
        assert len(store.judgment_trail(job.id, ideal_id)) == 2
        assert store.check_integrity() == []


class TestDatasets:
    def test_context_config_key_must_exist(self, store):
        dataset = Dataset(
            "dx", "chat",
            [Example("m1", "hello", {"conversation": "c1"})],
            ContextConfig("conversation", "timestamp"),
        )
        with pytest.raises(MalformedDataset):
            store.insert_dataset(dataset)

    def test_example_order_preserved(self, store):
        add_dataset(store, ["first", "second", "third"])
        assert store.dataset_example_ids("ds") == ["ds-e0", "ds-e1", "ds-e2"]

    def test_wipe_annotations_clears_events_keeps_tasks(self, store):
        add_dataset(store, ["target text"])
        schema = add_ner_schema(store)
        team = add_team(store, 1)
        job = scheduler.create_job(store, "ds", schema.id, team.id, 1)
        task = scheduler.next_task(store, job.id, "a1")
        scheduler.submit_task(store, task.id, "a1", [SpanPayload(0, 6, "PLACE")])
        store.wipe_annotations(job.id)
        assert store.ideal_count() == 0
        assert store.get_task(task.id).state is TaskState.SUBMITTED


def test_dataset_ids_survive_roundtrip():
    store = make_store()
    ds = add_dataset(store, ["alpha", "beta"])
    loaded = store.get_dataset(ds.id)
    assert [e.id for e in loaded.examples] == [e.id for e in ds.examples]
    assert [e.content for e in loaded.examples] == ["alpha", "beta"]
    store.close()
