"""Transactional relational store backing the platform.

SQLite with manual transaction control. A single connection guarded by a
reentrant lock serializes all transactions, which makes every write path
linearizable: concurrent identical interns converge to one row because
uniqueness is enforced by the `ideals(example_id, payload)` unique index,
not by callers. Nested `transaction()` blocks become savepoints, so an
operation composed of smaller store calls is still all-or-nothing.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
import uuid
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Iterable, Iterator

from labelkit import model
from labelkit.errors import (
    MalformedDataset,
    UnknownAnnotator,
    UnknownDataset,
    UnknownExample,
    UnknownIdeal,
    UnknownJob,
    UnknownSchema,
    UnknownTask,
    UnknownTeam,
)
from labelkit.model import (
    AnnotationEvent,
    AnnotationIdeal,
    Annotator,
    AnnotatorKind,
    ClassPayload,
    ContextConfig,
    Dataset,
    EntityTag,
    EventSource,
    Example,
    Job,
    JobState,
    JudgmentCause,
    Payload,
    PreAnnotation,
    PreAnnotationState,
    ReviewJudgment,
    Schema,
    SpanPayload,
    Task,
    TaskState,
    Team,
    Verdict,
    canonical_payload_json,
    payload_from_dict,
    payload_kind,
)

_SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS datasets (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    context_group_by TEXT,
    context_sort_by TEXT
);
CREATE TABLE IF NOT EXISTS examples (
    id TEXT PRIMARY KEY,
    dataset_id TEXT NOT NULL REFERENCES datasets(id),
    seq INTEGER NOT NULL,
    content TEXT NOT NULL CHECK (length(content) > 0),
    metadata TEXT NOT NULL,
    UNIQUE (dataset_id, seq)
);
CREATE TABLE IF NOT EXISTS schemas (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    entity_tags TEXT NOT NULL,
    classes TEXT NOT NULL,
    classification_mode TEXT NOT NULL,
    relation_types TEXT NOT NULL,
    allows_nonterminals INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS annotators (
    id TEXT PRIMARY KEY,
    display_name TEXT NOT NULL,
    kind TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS teams (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS team_members (
    team_id TEXT NOT NULL REFERENCES teams(id),
    annotator_id TEXT NOT NULL REFERENCES annotators(id),
    PRIMARY KEY (team_id, annotator_id)
);
CREATE TABLE IF NOT EXISTS jobs (
    id TEXT PRIMARY KEY,
    dataset_id TEXT NOT NULL REFERENCES datasets(id),
    schema_id TEXT NOT NULL REFERENCES schemas(id),
    team_id TEXT NOT NULL REFERENCES teams(id),
    redundancy INTEGER NOT NULL,
    state TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS tasks (
    id TEXT PRIMARY KEY,
    job_id TEXT NOT NULL REFERENCES jobs(id),
    annotator_id TEXT NOT NULL REFERENCES annotators(id),
    example_id TEXT NOT NULL REFERENCES examples(id),
    state TEXT NOT NULL,
    UNIQUE (job_id, annotator_id, example_id)
);
CREATE TABLE IF NOT EXISTS job_examples (
    job_id TEXT NOT NULL REFERENCES jobs(id),
    example_id TEXT NOT NULL REFERENCES examples(id),
    base_priority INTEGER NOT NULL DEFAULT 0,
    priority INTEGER NOT NULL DEFAULT 0,
    PRIMARY KEY (job_id, example_id)
);
CREATE TABLE IF NOT EXISTS ideals (
    id TEXT PRIMARY KEY,
    example_id TEXT NOT NULL REFERENCES examples(id),
    kind TEXT NOT NULL,
    payload TEXT NOT NULL,
    span_start INTEGER,
    span_end INTEGER,
    class_id TEXT,
    UNIQUE (example_id, payload)
);
CREATE TABLE IF NOT EXISTS events (
    id TEXT PRIMARY KEY,
    ideal_id TEXT NOT NULL REFERENCES ideals(id),
    task_id TEXT NOT NULL REFERENCES tasks(id),
    source TEXT NOT NULL,
    created_at INTEGER NOT NULL,
    UNIQUE (ideal_id, task_id)
);
CREATE TABLE IF NOT EXISTS preannotations (
    id TEXT PRIMARY KEY,
    ideal_id TEXT NOT NULL REFERENCES ideals(id),
    job_id TEXT NOT NULL REFERENCES jobs(id),
    origin TEXT NOT NULL,
    state TEXT NOT NULL,
    UNIQUE (job_id, ideal_id)
);
CREATE TABLE IF NOT EXISTS judgments (
    id TEXT PRIMARY KEY,
    job_id TEXT NOT NULL REFERENCES jobs(id),
    ideal_id TEXT NOT NULL REFERENCES ideals(id),
    reviewer_id TEXT NOT NULL,
    verdict TEXT NOT NULL,
    cause TEXT NOT NULL,
    trigger_ideal_id TEXT,
    created_at INTEGER NOT NULL,
    live INTEGER NOT NULL DEFAULT 1
);
CREATE UNIQUE INDEX IF NOT EXISTS judgments_live
    ON judgments(job_id, ideal_id) WHERE live = 1;
CREATE INDEX IF NOT EXISTS ideals_span_lookup
    ON ideals(example_id, kind, span_start, span_end);
CREATE INDEX IF NOT EXISTS events_by_task ON events(task_id);
CREATE INDEX IF NOT EXISTS events_by_ideal ON events(ideal_id);
CREATE INDEX IF NOT EXISTS tasks_by_job ON tasks(job_id, annotator_id, state);
CREATE INDEX IF NOT EXISTS tasks_by_example ON tasks(job_id, example_id, state);
CREATE INDEX IF NOT EXISTS judgments_by_trigger ON judgments(job_id, trigger_ideal_id, live);
"""


def default_id_factory() -> str:
    return str(uuid.uuid4())


def default_clock() -> int:
    return int(time.time() * 1000)


class Store:
    """All persistent state behind a transactional interface.

    `id_factory` and `clock` are injectable so tests and scripted scenarios
    can be fully deterministic; defaults are uuid4 and UTC wall-clock
    milliseconds.
    """

    def __init__(
        self,
        path: str | Path = ":memory:",
        *,
        id_factory: Callable[[], str] | None = None,
        clock: Callable[[], int] | None = None,
    ):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.isolation_level = None  # manual BEGIN/COMMIT
        self._conn.execute("PRAGMA foreign_keys = ON")
        self._lock = threading.RLock()
        self._txn_depth = 0
        self.new_id = id_factory or default_id_factory
        self.now = clock or default_clock
        with self._lock:
            self._conn.executescript(_SCHEMA_SQL)

    def close(self) -> None:
        self._conn.close()

    @contextmanager
    def transaction(self) -> Iterator[sqlite3.Connection]:
        """Serialized transaction; nested use becomes a savepoint."""
        self._lock.acquire()
        try:
            depth = self._txn_depth
            if depth == 0:
                self._conn.execute("BEGIN IMMEDIATE")
            else:
                self._conn.execute(f"SAVEPOINT sp{depth}")
            self._txn_depth = depth + 1
            try:
                yield self._conn
            except BaseException:
                self._txn_depth = depth
                if depth == 0:
                    self._conn.execute("ROLLBACK")
                else:
                    self._conn.execute(f"ROLLBACK TO sp{depth}")
                    self._conn.execute(f"RELEASE sp{depth}")
                raise
            else:
                self._txn_depth = depth
                if depth == 0:
                    self._conn.execute("COMMIT")
                else:
                    self._conn.execute(f"RELEASE sp{depth}")
        finally:
            self._lock.release()

    def _query(self, sql: str, params: Iterable = ()) -> list[sqlite3.Row]:
        with self._lock:
            cur = self._conn.execute(sql, tuple(params))
            cur.row_factory = sqlite3.Row  # type: ignore[assignment]
            return cur.fetchall()

    def _one(self, sql: str, params: Iterable = ()) -> sqlite3.Row | None:
        rows = self._query(sql, params)
        return rows[0] if rows else None

    # ------------------------------------------------------------------
    # Datasets and examples

    def insert_dataset(self, dataset: Dataset) -> None:
        with self.transaction() as conn:
            if dataset.context_config is not None:
                keys = {k for ex in dataset.examples for k in ex.metadata}
                for key in (dataset.context_config.group_by, dataset.context_config.sort_by):
                    if key not in keys:
                        raise MalformedDataset(
                            [f"context_config key {key!r} not present in any example metadata"]
                        )
            cc = dataset.context_config
            conn.execute(
                "INSERT INTO datasets (id, name, context_group_by, context_sort_by) VALUES (?,?,?,?)",
                (dataset.id, dataset.name, cc.group_by if cc else None, cc.sort_by if cc else None),
            )
            try:
                conn.executemany(
                    "INSERT INTO examples (id, dataset_id, seq, content, metadata) VALUES (?,?,?,?,?)",
                    [
                        (ex.id, dataset.id, seq, ex.content, json.dumps(ex.metadata, sort_keys=True))
                        for seq, ex in enumerate(dataset.examples)
                    ],
                )
            except sqlite3.IntegrityError as exc:
                raise MalformedDataset([f"example id collision: {exc}"]) from exc

    def get_dataset(self, dataset_id: str) -> Dataset:
        row = self._one("SELECT * FROM datasets WHERE id = ?", (dataset_id,))
        if row is None:
            raise UnknownDataset(dataset_id)
        examples = [
            Example(r["id"], r["content"], json.loads(r["metadata"]))
            for r in self._query(
                "SELECT * FROM examples WHERE dataset_id = ? ORDER BY seq", (dataset_id,)
            )
        ]
        cc = None
        if row["context_group_by"] is not None:
            cc = ContextConfig(row["context_group_by"], row["context_sort_by"])
        return Dataset(row["id"], row["name"], examples, cc)

    def dataset_exists(self, dataset_id: str) -> bool:
        return self._one("SELECT 1 FROM datasets WHERE id = ?", (dataset_id,)) is not None

    def list_datasets(self) -> list[tuple[str, str, int]]:
        return [
            (r["id"], r["name"], r["n"])
            for r in self._query(
                "SELECT d.id, d.name, COUNT(e.id) AS n FROM datasets d "
                "LEFT JOIN examples e ON e.dataset_id = d.id GROUP BY d.id ORDER BY d.rowid"
            )
        ]

    def get_example(self, example_id: str) -> Example:
        row = self._one("SELECT * FROM examples WHERE id = ?", (example_id,))
        if row is None:
            raise UnknownExample(example_id)
        return Example(row["id"], row["content"], json.loads(row["metadata"]))

    def example_dataset(self, example_id: str) -> str:
        row = self._one("SELECT dataset_id FROM examples WHERE id = ?", (example_id,))
        if row is None:
            raise UnknownExample(example_id)
        return row["dataset_id"]

    def dataset_example_ids(self, dataset_id: str) -> list[str]:
        if not self.dataset_exists(dataset_id):
            raise UnknownDataset(dataset_id)
        return [
            r["id"]
            for r in self._query(
                "SELECT id FROM examples WHERE dataset_id = ? ORDER BY seq", (dataset_id,)
            )
        ]

    # ------------------------------------------------------------------
    # Schemas, annotators, teams

    def insert_schema(self, schema: Schema) -> None:
        tags = [[t.id, t.name, t.color] for t in schema.entity_tags]
        with self.transaction() as conn:
            conn.execute(
                "INSERT INTO schemas VALUES (?,?,?,?,?,?,?)",
                (
                    schema.id,
                    schema.name,
                    json.dumps(tags),
                    json.dumps(schema.classes),
                    schema.classification_mode.value,
                    json.dumps(schema.relation_types),
                    int(schema.allows_nonterminals),
                ),
            )

    def get_schema(self, schema_id: str) -> Schema:
        row = self._one("SELECT * FROM schemas WHERE id = ?", (schema_id,))
        if row is None:
            raise UnknownSchema(schema_id)
        return Schema(
            id=row["id"],
            name=row["name"],
            entity_tags=[EntityTag(t[0], t[1], t[2]) for t in json.loads(row["entity_tags"])],
            classes=json.loads(row["classes"]),
            classification_mode=model.ClassificationMode(row["classification_mode"]),
            relation_types=json.loads(row["relation_types"]),
            allows_nonterminals=bool(row["allows_nonterminals"]),
        )

    def insert_annotator(self, annotator: Annotator) -> None:
        with self.transaction() as conn:
            conn.execute(
                "INSERT INTO annotators VALUES (?,?,?)",
                (annotator.id, annotator.display_name, annotator.kind.value),
            )

    def get_annotator(self, annotator_id: str) -> Annotator:
        row = self._one("SELECT * FROM annotators WHERE id = ?", (annotator_id,))
        if row is None:
            raise UnknownAnnotator(annotator_id)
        return Annotator(row["id"], row["display_name"], AnnotatorKind(row["kind"]))

    def insert_team(self, team: Team) -> None:
        with self.transaction() as conn:
            for member in team.members:
                self.get_annotator(member)
            conn.execute("INSERT INTO teams VALUES (?,?)", (team.id, team.name))
            conn.executemany(
                "INSERT INTO team_members VALUES (?,?)",
                [(team.id, m) for m in team.members],
            )

    def get_team(self, team_id: str) -> Team:
        row = self._one("SELECT * FROM teams WHERE id = ?", (team_id,))
        if row is None:
            raise UnknownTeam(team_id)
        members = [
            r["annotator_id"]
            for r in self._query(
                "SELECT annotator_id FROM team_members WHERE team_id = ? ORDER BY rowid",
                (team_id,),
            )
        ]
        return Team(row["id"], row["name"], members)

    # ------------------------------------------------------------------
    # Jobs, tasks, priorities

    def insert_job(self, job: Job) -> None:
        with self.transaction() as conn:
            conn.execute(
                "INSERT INTO jobs VALUES (?,?,?,?,?,?)",
                (job.id, job.dataset_id, job.schema_id, job.team_id, job.redundancy, job.state.value),
            )

    def get_job(self, job_id: str) -> Job:
        row = self._one("SELECT * FROM jobs WHERE id = ?", (job_id,))
        if row is None:
            raise UnknownJob(job_id)
        return Job(
            row["id"], row["dataset_id"], row["schema_id"], row["team_id"],
            row["redundancy"], JobState(row["state"]),
        )

    def list_jobs(self) -> list[Job]:
        return [
            Job(r["id"], r["dataset_id"], r["schema_id"], r["team_id"],
                r["redundancy"], JobState(r["state"]))
            for r in self._query("SELECT * FROM jobs ORDER BY rowid")
        ]

    def set_job_state(self, job_id: str, state: JobState) -> None:
        with self.transaction() as conn:
            conn.execute("UPDATE jobs SET state = ? WHERE id = ?", (state.value, job_id))

    def insert_tasks(self, tasks: list[Task]) -> None:
        with self.transaction() as conn:
            conn.executemany(
                "INSERT INTO tasks VALUES (?,?,?,?,?)",
                [(t.id, t.job_id, t.annotator_id, t.example_id, t.state.value) for t in tasks],
            )

    def init_job_examples(self, job_id: str, example_ids: list[str]) -> None:
        with self.transaction() as conn:
            conn.executemany(
                "INSERT INTO job_examples (job_id, example_id) VALUES (?,?)",
                [(job_id, ex) for ex in example_ids],
            )

    def get_task(self, task_id: str) -> Task:
        row = self._one("SELECT * FROM tasks WHERE id = ?", (task_id,))
        if row is None:
            raise UnknownTask(task_id)
        return Task(row["id"], row["job_id"], row["annotator_id"], row["example_id"],
                    TaskState(row["state"]))

    def set_task_state(self, task_id: str, state: TaskState) -> None:
        with self.transaction() as conn:
            conn.execute("UPDATE tasks SET state = ? WHERE id = ?", (state.value, task_id))

    def next_pending_task(self, job_id: str, annotator_id: str) -> Task | None:
        row = self._one(
            "SELECT t.* FROM tasks t "
            "JOIN job_examples je ON je.job_id = t.job_id AND je.example_id = t.example_id "
            "JOIN examples e ON e.id = t.example_id "
            "WHERE t.job_id = ? AND t.annotator_id = ? AND t.state = 'pending' "
            "ORDER BY je.priority DESC, e.seq ASC LIMIT 1",
            (job_id, annotator_id),
        )
        if row is None:
            return None
        return Task(row["id"], row["job_id"], row["annotator_id"], row["example_id"],
                    TaskState(row["state"]))

    def tasks_for_job(self, job_id: str) -> list[Task]:
        return [
            Task(r["id"], r["job_id"], r["annotator_id"], r["example_id"], TaskState(r["state"]))
            for r in self._query("SELECT * FROM tasks WHERE job_id = ? ORDER BY rowid", (job_id,))
        ]

    def job_example_ids(self, job_id: str) -> list[str]:
        return [
            r["example_id"]
            for r in self._query(
                "SELECT je.example_id FROM job_examples je "
                "JOIN examples e ON e.id = je.example_id "
                "WHERE je.job_id = ? ORDER BY e.seq",
                (job_id,),
            )
        ]

    def get_priorities(self, job_id: str) -> dict[str, int]:
        return {
            r["example_id"]: r["priority"]
            for r in self._query(
                "SELECT example_id, priority FROM job_examples WHERE job_id = ?", (job_id,)
            )
        }

    def set_priority(self, job_id: str, example_id: str, priority: int) -> None:
        with self.transaction() as conn:
            conn.execute(
                "UPDATE job_examples SET priority = ? WHERE job_id = ? AND example_id = ?",
                (priority, job_id, example_id),
            )

    def get_base_priorities(self, job_id: str) -> dict[str, int]:
        return {
            r["example_id"]: r["base_priority"]
            for r in self._query(
                "SELECT example_id, base_priority FROM job_examples WHERE job_id = ?", (job_id,)
            )
        }

    # ------------------------------------------------------------------
    # Ideals and events

    def intern_ideal(self, example_id: str, payload: Payload) -> tuple[str, bool]:
        """Store a canonical payload once per example; returns (ideal id, created).

        Callers must canonicalize/validate first; identity is the canonical
        JSON encoding, enforced by a unique index so concurrent identical
        interns converge to a single row.
        """
        encoded = canonical_payload_json(payload)
        kind = payload_kind(payload)
        span_start = span_end = class_id = None
        if isinstance(payload, SpanPayload):
            span_start, span_end = payload.start, payload.end
        elif isinstance(payload, ClassPayload):
            class_id = payload.class_id
        with self.transaction() as conn:
            if self._one("SELECT 1 FROM examples WHERE id = ?", (example_id,)) is None:
                raise UnknownExample(example_id)
            cur = conn.execute(
                "INSERT INTO ideals (id, example_id, kind, payload, span_start, span_end, class_id) "
                "VALUES (?,?,?,?,?,?,?) ON CONFLICT (example_id, payload) DO NOTHING",
                (self.new_id(), example_id, kind, encoded, span_start, span_end, class_id),
            )
            created = cur.rowcount == 1
            row = self._one(
                "SELECT id FROM ideals WHERE example_id = ? AND payload = ?",
                (example_id, encoded),
            )
            assert row is not None
            return row["id"], created

    def _ideal_from_row(self, row: sqlite3.Row) -> AnnotationIdeal:
        return AnnotationIdeal(row["id"], row["example_id"], payload_from_dict(json.loads(row["payload"])))

    def get_ideal(self, ideal_id: str) -> AnnotationIdeal:
        row = self._one("SELECT * FROM ideals WHERE id = ?", (ideal_id,))
        if row is None:
            raise UnknownIdeal(ideal_id)
        return self._ideal_from_row(row)

    def ideal_count(self) -> int:
        row = self._one("SELECT COUNT(*) AS n FROM ideals")
        assert row is not None
        return row["n"]

    def span_ideal_ids(self, example_id: str) -> set[str]:
        return {
            r["id"]
            for r in self._query(
                "SELECT id FROM ideals WHERE example_id = ? AND kind = 'span'", (example_id,)
            )
        }

    def record_event(
        self, ideal_id: str, task_id: str, source: EventSource
    ) -> AnnotationEvent | None:
        """Record an assertion; returns None when this (ideal, task) pair already exists."""
        with self.transaction() as conn:
            event = AnnotationEvent(self.new_id(), ideal_id, task_id, source, self.now())
            cur = conn.execute(
                "INSERT INTO events (id, ideal_id, task_id, source, created_at) "
                "VALUES (?,?,?,?,?) ON CONFLICT (ideal_id, task_id) DO NOTHING",
                (event.id, event.ideal_id, event.task_id, event.source.value, event.created_at),
            )
            return event if cur.rowcount == 1 else None

    def ideal_has_events_in_job(self, job_id: str, ideal_id: str) -> bool:
        return (
            self._one(
                "SELECT 1 FROM events ev JOIN tasks t ON t.id = ev.task_id "
                "WHERE ev.ideal_id = ? AND t.job_id = ? LIMIT 1",
                (ideal_id, job_id),
            )
            is not None
        )

    def ideals_with_events(
        self, job_id: str, example_id: str | None = None, kind: str | None = None
    ) -> list[AnnotationIdeal]:
        sql = (
            "SELECT DISTINCT i.* FROM ideals i "
            "JOIN events ev ON ev.ideal_id = i.id "
            "JOIN tasks t ON t.id = ev.task_id WHERE t.job_id = ?"
        )
        params: list = [job_id]
        if example_id is not None:
            sql += " AND i.example_id = ?"
            params.append(example_id)
        if kind is not None:
            sql += " AND i.kind = ?"
            params.append(kind)
        sql += " ORDER BY i.rowid"
        return [self._ideal_from_row(r) for r in self._query(sql, params)]

    def conflict_candidates(self, job_id: str, ideal: AnnotationIdeal) -> list[AnnotationIdeal]:
        """Ideals on the same example that could conflict with `ideal`, found by
        indexed lookup (span interval / class kind) rather than a table scan.
        Only ideals with at least one event in the job are returned."""
        scope = (
            "AND EXISTS (SELECT 1 FROM events ev JOIN tasks t ON t.id = ev.task_id "
            "WHERE ev.ideal_id = i.id AND t.job_id = ?)"
        )
        if isinstance(ideal.payload, SpanPayload):
            rows = self._query(
                f"SELECT i.* FROM ideals i WHERE i.example_id = ? AND i.kind = 'span' "
                f"AND i.span_start < ? AND i.span_end > ? AND i.id != ? {scope}",
                (ideal.example_id, ideal.payload.end, ideal.payload.start, ideal.id, job_id),
            )
        elif isinstance(ideal.payload, ClassPayload):
            rows = self._query(
                f"SELECT i.* FROM ideals i WHERE i.example_id = ? AND i.kind = 'class' "
                f"AND i.class_id != ? AND i.id != ? {scope}",
                (ideal.example_id, ideal.payload.class_id, ideal.id, job_id),
            )
        else:
            rows = self._query(
                f"SELECT i.* FROM ideals i WHERE i.example_id = ? AND i.kind = 'relation' "
                f"AND i.id != ? {scope}",
                (ideal.example_id, ideal.id, job_id),
            )
        return [self._ideal_from_row(r) for r in rows]

    def first_event_time(self, job_id: str, ideal_id: str) -> int | None:
        row = self._one(
            "SELECT MIN(ev.created_at) AS t FROM events ev JOIN tasks t ON t.id = ev.task_id "
            "WHERE ev.ideal_id = ? AND t.job_id = ?",
            (ideal_id, job_id),
        )
        return row["t"] if row else None

    def events_for_example(
        self, job_id: str, example_id: str
    ) -> list[tuple[AnnotationEvent, str, AnnotatorKind]]:
        """Events in the job on this example, with the asserting annotator."""
        rows = self._query(
            "SELECT ev.*, t.annotator_id, a.kind AS akind FROM events ev "
            "JOIN tasks t ON t.id = ev.task_id JOIN annotators a ON a.id = t.annotator_id "
            "JOIN ideals i ON i.id = ev.ideal_id "
            "WHERE t.job_id = ? AND i.example_id = ? ORDER BY ev.created_at, ev.id",
            (job_id, example_id),
        )
        return [
            (
                AnnotationEvent(r["id"], r["ideal_id"], r["task_id"],
                                EventSource(r["source"]), r["created_at"]),
                r["annotator_id"],
                AnnotatorKind(r["akind"]),
            )
            for r in rows
        ]

    def events_for_ideal(
        self, job_id: str, ideal_id: str
    ) -> list[tuple[AnnotationEvent, str, AnnotatorKind]]:
        rows = self._query(
            "SELECT ev.*, t.annotator_id, a.kind AS akind FROM events ev "
            "JOIN tasks t ON t.id = ev.task_id JOIN annotators a ON a.id = t.annotator_id "
            "WHERE t.job_id = ? AND ev.ideal_id = ? ORDER BY ev.created_at, ev.id",
            (job_id, ideal_id),
        )
        return [
            (
                AnnotationEvent(r["id"], r["ideal_id"], r["task_id"],
                                EventSource(r["source"]), r["created_at"]),
                r["annotator_id"],
                AnnotatorKind(r["akind"]),
            )
            for r in rows
        ]

    def submitted_annotators(self, job_id: str, example_id: str) -> list[tuple[str, AnnotatorKind]]:
        rows = self._query(
            "SELECT t.annotator_id, a.kind FROM tasks t JOIN annotators a ON a.id = t.annotator_id "
            "WHERE t.job_id = ? AND t.example_id = ? AND t.state = 'submitted' "
            "ORDER BY t.annotator_id",
            (job_id, example_id),
        )
        return [(r["annotator_id"], AnnotatorKind(r["kind"])) for r in rows]

    def submitted_pairs(self, job_id: str) -> list[tuple[str, str]]:
        """(annotator_id, example_id) for every submitted task in the job."""
        return [
            (r["annotator_id"], r["example_id"])
            for r in self._query(
                "SELECT annotator_id, example_id FROM tasks WHERE job_id = ? AND state = 'submitted'",
                (job_id,),
            )
        ]

    def assertion_rows(
        self, job_id: str, kind: str | None = None
    ) -> list[tuple[str, str, str, str | None, int]]:
        """(ideal_id, example_id, annotator_id, class_id, created_at) per event."""
        sql = (
            "SELECT ev.ideal_id, i.example_id, t.annotator_id, i.class_id, ev.created_at "
            "FROM events ev JOIN tasks t ON t.id = ev.task_id "
            "JOIN ideals i ON i.id = ev.ideal_id WHERE t.job_id = ?"
        )
        params: list = [job_id]
        if kind is not None:
            sql += " AND i.kind = ?"
            params.append(kind)
        sql += " ORDER BY ev.created_at, ev.id"
        return [
            (r["ideal_id"], r["example_id"], r["annotator_id"], r["class_id"], r["created_at"])
            for r in self._query(sql, params)
        ]

    def count_events_since(self, job_id: str, since_ms: int) -> int:
        row = self._one(
            "SELECT COUNT(*) AS n FROM events ev JOIN tasks t ON t.id = ev.task_id "
            "WHERE t.job_id = ? AND ev.created_at >= ?",
            (job_id, since_ms),
        )
        assert row is not None
        return row["n"]

    def export_rows(self, job_id: str) -> list[tuple[AnnotationEvent, str, AnnotationIdeal]]:
        """(event, annotator_id, ideal) for every event of the job, in stable order."""
        rows = self._query(
            "SELECT ev.id AS eid, ev.source, ev.created_at, ev.task_id, t.annotator_id, i.* "
            "FROM events ev JOIN tasks t ON t.id = ev.task_id "
            "JOIN ideals i ON i.id = ev.ideal_id "
            "WHERE t.job_id = ? ORDER BY ev.created_at, ev.id",
            (job_id,),
        )
        return [
            (
                AnnotationEvent(r["eid"], r["id"], r["task_id"],
                                EventSource(r["source"]), r["created_at"]),
                r["annotator_id"],
                self._ideal_from_row(r),
            )
            for r in rows
        ]

    def insert_ideal_raw(self, ideal: AnnotationIdeal) -> None:
        """Insert an ideal preserving its id (import path); no-op when present."""
        encoded = canonical_payload_json(ideal.payload)
        span_start = span_end = class_id = None
        if isinstance(ideal.payload, SpanPayload):
            span_start, span_end = ideal.payload.start, ideal.payload.end
        elif isinstance(ideal.payload, ClassPayload):
            class_id = ideal.payload.class_id
        with self.transaction() as conn:
            conn.execute(
                "INSERT INTO ideals (id, example_id, kind, payload, span_start, span_end, class_id) "
                "VALUES (?,?,?,?,?,?,?) ON CONFLICT (example_id, payload) DO NOTHING",
                (ideal.id, ideal.example_id, payload_kind(ideal.payload), encoded,
                 span_start, span_end, class_id),
            )

    def insert_event_raw(self, event: AnnotationEvent) -> None:
        with self.transaction() as conn:
            conn.execute(
                "INSERT INTO events (id, ideal_id, task_id, source, created_at) "
                "VALUES (?,?,?,?,?) ON CONFLICT (ideal_id, task_id) DO NOTHING",
                (event.id, event.ideal_id, event.task_id, event.source.value, event.created_at),
            )

    def insert_judgment_raw(self, judgment: ReviewJudgment) -> None:
        with self.transaction() as conn:
            existing = self._one(
                "SELECT 1 FROM judgments WHERE job_id = ? AND ideal_id = ? AND live = 1",
                (judgment.job_id, judgment.ideal_id),
            )
            if existing is not None:
                return
            conn.execute(
                "INSERT INTO judgments VALUES (?,?,?,?,?,?,?,?,1)",
                (judgment.id, judgment.job_id, judgment.ideal_id, judgment.reviewer_id,
                 judgment.verdict.value, judgment.cause.value, judgment.trigger_ideal_id,
                 judgment.created_at),
            )

    # ------------------------------------------------------------------
    # Pre-annotations

    def upsert_preannotation(
        self, job_id: str, ideal_id: str, origin: str
    ) -> tuple[PreAnnotation, bool]:
        """Insert a pending pre-annotation; duplicates per (job, ideal) collapse."""
        with self.transaction() as conn:
            cur = conn.execute(
                "INSERT INTO preannotations (id, ideal_id, job_id, origin, state) "
                "VALUES (?,?,?,?,?) ON CONFLICT (job_id, ideal_id) DO NOTHING",
                (self.new_id(), ideal_id, job_id, origin, PreAnnotationState.PENDING.value),
            )
            created = cur.rowcount == 1
            row = self._one(
                "SELECT * FROM preannotations WHERE job_id = ? AND ideal_id = ?",
                (job_id, ideal_id),
            )
            assert row is not None
            return self._preannotation_from_row(row), created

    def _preannotation_from_row(self, row: sqlite3.Row) -> PreAnnotation:
        return PreAnnotation(row["id"], row["ideal_id"], row["job_id"], row["origin"],
                             PreAnnotationState(row["state"]))

    def get_preannotation(self, preannotation_id: str) -> PreAnnotation | None:
        row = self._one("SELECT * FROM preannotations WHERE id = ?", (preannotation_id,))
        return self._preannotation_from_row(row) if row else None

    def set_preannotation_state(self, preannotation_id: str, state: PreAnnotationState) -> None:
        with self.transaction() as conn:
            conn.execute(
                "UPDATE preannotations SET state = ? WHERE id = ?",
                (state.value, preannotation_id),
            )

    def preannotations_for_example(self, job_id: str, example_id: str) -> list[PreAnnotation]:
        rows = self._query(
            "SELECT p.* FROM preannotations p JOIN ideals i ON i.id = p.ideal_id "
            "WHERE p.job_id = ? AND i.example_id = ? ORDER BY p.rowid",
            (job_id, example_id),
        )
        return [self._preannotation_from_row(r) for r in rows]

    def count_preannotations(self, job_id: str) -> int:
        row = self._one("SELECT COUNT(*) AS n FROM preannotations WHERE job_id = ?", (job_id,))
        assert row is not None
        return row["n"]

    # ------------------------------------------------------------------
    # Judgments

    def _judgment_from_row(self, row: sqlite3.Row) -> ReviewJudgment:
        return ReviewJudgment(
            row["id"], row["job_id"], row["ideal_id"], row["reviewer_id"],
            Verdict(row["verdict"]), JudgmentCause(row["cause"]),
            row["trigger_ideal_id"], row["created_at"],
        )

    def live_judgment(self, job_id: str, ideal_id: str) -> ReviewJudgment | None:
        row = self._one(
            "SELECT * FROM judgments WHERE job_id = ? AND ideal_id = ? AND live = 1",
            (job_id, ideal_id),
        )
        return self._judgment_from_row(row) if row else None

    def live_judgments(self, job_id: str) -> dict[str, ReviewJudgment]:
        return {
            r["ideal_id"]: self._judgment_from_row(r)
            for r in self._query(
                "SELECT * FROM judgments WHERE job_id = ? AND live = 1", (job_id,)
            )
        }

    def set_live_judgment(
        self,
        job_id: str,
        ideal_id: str,
        reviewer_id: str,
        verdict: Verdict,
        cause: JudgmentCause,
        trigger_ideal_id: str | None = None,
    ) -> ReviewJudgment:
        """Replace the live judgment for (job, ideal); the old row is kept as trail."""
        with self.transaction() as conn:
            conn.execute(
                "UPDATE judgments SET live = 0 WHERE job_id = ? AND ideal_id = ? AND live = 1",
                (job_id, ideal_id),
            )
            judgment = ReviewJudgment(
                self.new_id(), job_id, ideal_id, reviewer_id, verdict, cause,
                trigger_ideal_id, self.now(),
            )
            conn.execute(
                "INSERT INTO judgments VALUES (?,?,?,?,?,?,?,?,1)",
                (judgment.id, judgment.job_id, judgment.ideal_id, judgment.reviewer_id,
                 judgment.verdict.value, judgment.cause.value, judgment.trigger_ideal_id,
                 judgment.created_at),
            )
            return judgment

    def revoke_judgment(self, job_id: str, ideal_id: str) -> None:
        with self.transaction() as conn:
            conn.execute(
                "UPDATE judgments SET live = 0 WHERE job_id = ? AND ideal_id = ? AND live = 1",
                (job_id, ideal_id),
            )

    def judgments_triggered_by(self, job_id: str, trigger_ideal_id: str) -> list[ReviewJudgment]:
        rows = self._query(
            "SELECT * FROM judgments WHERE job_id = ? AND trigger_ideal_id = ? AND live = 1",
            (job_id, trigger_ideal_id),
        )
        return [self._judgment_from_row(r) for r in rows]

    def accepted_judgments(self, job_id: str) -> list[ReviewJudgment]:
        rows = self._query(
            "SELECT * FROM judgments WHERE job_id = ? AND verdict = 'accepted' AND live = 1 "
            "ORDER BY created_at, id",
            (job_id,),
        )
        return [self._judgment_from_row(r) for r in rows]

    def judgment_trail(self, job_id: str, ideal_id: str) -> list[ReviewJudgment]:
        rows = self._query(
            "SELECT * FROM judgments WHERE job_id = ? AND ideal_id = ? ORDER BY created_at, rowid",
            (job_id, ideal_id),
        )
        return [self._judgment_from_row(r) for r in rows]

    # ------------------------------------------------------------------
    # Maintenance

    def wipe_annotations(self, job_id: str) -> None:
        """Delete all annotation state of a job (judgments, events, pre-annotations,
        and ideals no longer referenced anywhere). Dataset, schema, job and task
        rows survive; used by the export/import roundtrip."""
        with self.transaction() as conn:
            conn.execute("DELETE FROM judgments WHERE job_id = ?", (job_id,))
            conn.execute("DELETE FROM preannotations WHERE job_id = ?", (job_id,))
            conn.execute(
                "DELETE FROM events WHERE task_id IN (SELECT id FROM tasks WHERE job_id = ?)",
                (job_id,),
            )
            conn.execute(
                "DELETE FROM ideals WHERE id NOT IN (SELECT ideal_id FROM events) "
                "AND id NOT IN (SELECT ideal_id FROM preannotations) "
                "AND id NOT IN (SELECT ideal_id FROM judgments)"
            )

    def check_integrity(self) -> list[str]:
        """Referential-integrity scan; returns human-readable violations."""
        problems = []
        for r in self._query(
            "SELECT ev.id FROM events ev "
            "JOIN tasks t ON t.id = ev.task_id JOIN ideals i ON i.id = ev.ideal_id "
            "WHERE t.example_id != i.example_id"
        ):
            problems.append(f"event {r['id']}: task and ideal reference different examples")
        for r in self._query(
            "SELECT ev.id FROM events ev LEFT JOIN tasks t ON t.id = ev.task_id WHERE t.id IS NULL"
        ):
            problems.append(f"event {r['id']}: dangling task reference")
        for r in self._query(
            "SELECT ev.id FROM events ev LEFT JOIN ideals i ON i.id = ev.ideal_id WHERE i.id IS NULL"
        ):
            problems.append(f"event {r['id']}: dangling ideal reference")
        for r in self._query(
            "SELECT job_id, ideal_id, COUNT(*) AS n FROM judgments WHERE live = 1 "
            "GROUP BY job_id, ideal_id HAVING n > 1"
        ):
            problems.append(f"ideal {r['ideal_id']}: multiple live judgments in job {r['job_id']}")
        return problems
