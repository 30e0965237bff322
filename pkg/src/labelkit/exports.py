"""JSONL export and import of a job's annotations.

Two modes: "all" emits one line per (ideal, event); "accepted-only" emits one
line per accepted ideal with its supporters and judgment trail. Field order
and line order are stable, so exporting, wiping the job's annotations,
importing the file and exporting again reproduces the bytes exactly.

Import restores annotation rows into an existing job: the dataset, schema,
team and task scaffolding must already be present (they are configuration,
shipped as dataset/schema JSON, not annotation data).
"""

from __future__ import annotations

import json
from typing import Iterable, Iterator

from labelkit.errors import InvalidPayload, UnknownTask
from labelkit.model import (
    AnnotationEvent,
    AnnotationIdeal,
    EventSource,
    JudgmentCause,
    ReviewJudgment,
    Verdict,
    payload_from_dict,
    payload_to_dict,
)
from labelkit.store import Store

FORMAT_VERSION = 1


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _judgment_dict(judgment: ReviewJudgment) -> dict:
    return {
        "verdict": judgment.verdict.value,
        "cause": judgment.cause.value,
        "reviewer_id": judgment.reviewer_id,
        "trigger_ideal_id": judgment.trigger_ideal_id,
        "created_at": judgment.created_at,
    }


def export_lines(store: Store, job_id: str, mode: str = "all") -> Iterator[str]:
    """Yield JSONL lines for the job; mode is "all" or "accepted-only"."""
    store.get_job(job_id)
    if mode == "all":
        judgments = store.live_judgments(job_id)
        for event, annotator_id, ideal in store.export_rows(job_id):
            judgment = judgments.get(ideal.id)
            yield _dump(
                {
                    "format_version": FORMAT_VERSION,
                    "job_id": job_id,
                    "example_id": ideal.example_id,
                    "ideal_id": ideal.id,
                    "payload": payload_to_dict(ideal.payload),
                    "event_id": event.id,
                    "task_id": event.task_id,
                    "annotator_id": annotator_id,
                    "source": event.source.value,
                    "created_at": event.created_at,
                    "judgment": _judgment_dict(judgment) if judgment else None,
                }
            )
    elif mode == "accepted-only":
        for judgment in store.accepted_judgments(job_id):
            ideal = store.get_ideal(judgment.ideal_id)
            supporters = sorted(
                {annotator for _ev, annotator, _kind in store.events_for_ideal(job_id, ideal.id)}
            )
            yield _dump(
                {
                    "format_version": FORMAT_VERSION,
                    "job_id": job_id,
                    "example_id": ideal.example_id,
                    "ideal_id": ideal.id,
                    "payload": payload_to_dict(ideal.payload),
                    "supporting_annotators": supporters,
                    "judgment_trail": [
                        _judgment_dict(j) for j in store.judgment_trail(job_id, ideal.id)
                    ],
                }
            )
    else:
        raise ValueError(f"unknown export mode: {mode!r}")


def export_bytes(store: Store, job_id: str, mode: str = "all") -> bytes:
    lines = list(export_lines(store, job_id, mode))
    if not lines:
        return b""
    return ("\n".join(lines) + "\n").encode("utf-8")


def import_annotations(store: Store, job_id: str, lines: Iterable[str]) -> dict[str, int]:
    """Restore an "all"-mode export into an existing job; returns row counts.

    Ideals, events and live judgments are recreated with their original ids
    and timestamps; duplicate lines collapse. The whole import is one
    transaction.
    """
    counts = {"ideals": 0, "events": 0, "judgments": 0}
    with store.transaction():
        job = store.get_job(job_id)
        seen_ideals: set[str] = set()
        seen_events: set[str] = set()
        judged: set[str] = set()
        for raw in lines:
            raw = raw.strip()
            if not raw:
                continue
            record = json.loads(raw)
            if record.get("format_version") != FORMAT_VERSION:
                raise InvalidPayload(
                    f"unsupported format_version: {record.get('format_version')!r}"
                )
            if record["job_id"] != job_id:
                raise InvalidPayload(
                    f"line belongs to job {record['job_id']}, importing into {job_id}"
                )
            task = store.get_task(record["task_id"])
            if task.job_id != job_id or task.example_id != record["example_id"]:
                raise UnknownTask(
                    f"task {record['task_id']} does not match job/example in line"
                )
            if record["ideal_id"] not in seen_ideals:
                store.insert_ideal_raw(
                    AnnotationIdeal(
                        record["ideal_id"],
                        record["example_id"],
                        payload_from_dict(record["payload"]),
                    )
                )
                seen_ideals.add(record["ideal_id"])
                counts["ideals"] += 1
            if record["event_id"] not in seen_events:
                store.insert_event_raw(
                    AnnotationEvent(
                        record["event_id"],
                        record["ideal_id"],
                        record["task_id"],
                        EventSource(record["source"]),
                        record["created_at"],
                    )
                )
                seen_events.add(record["event_id"])
                counts["events"] += 1
            judgment = record.get("judgment")
            if judgment and record["ideal_id"] not in judged:
                store.insert_judgment_raw(
                    ReviewJudgment(
                        store.new_id(),
                        job.id,
                        record["ideal_id"],
                        judgment["reviewer_id"],
                        Verdict(judgment["verdict"]),
                        JudgmentCause(judgment["cause"]),
                        judgment["trigger_ideal_id"],
                        judgment["created_at"],
                    )
                )
                judged.add(record["ideal_id"])
                counts["judgments"] += 1
    return counts
