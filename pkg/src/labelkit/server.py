"""HTTP service binding the platform: datasets, schemas, jobs, task leasing,
search, review, analytics, pre-annotation and export.

Every request carries a bearer token from the configured token list; manager
endpoints reject annotator tokens. All state-changing endpoints run in one
store transaction, so a failed request leaves storage unchanged.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from fastapi import Body, Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from labelkit import analytics, exports, review, scheduler, trigram
from labelkit.errors import (
    ConflictsWithAccepted,
    EmptyAfterTrim,
    InvalidPayload,
    InvalidRegex,
    LabelkitError,
    MalformedDataset,
    NoGold,
    NotTeamMember,
    RedundancyExceedsTeam,
    TaskNotLeased,
    UnknownAnnotator,
    UnknownDataset,
    UnknownExample,
    UnknownIdeal,
    UnknownJob,
    UnknownSchema,
    UnknownTask,
    UnknownTeam,
    WrongJobKind,
)
from labelkit.formats import parse_dataset_upload, parse_schema_upload
from labelkit.model import (
    Annotator,
    AnnotatorKind,
    JobState,
    PreAnnotationState,
    ReviewScope,
    SpanPayload,
    Task,
    TaskState,
    Team,
    Verdict,
    normalize_span,
    payload_from_dict,
    payload_to_dict,
    validate_payload,
)
from labelkit.store import Store

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class TokenConfig:
    token: str
    role: str  # "annotator" | "manager"
    name: str = ""
    annotator_id: str | None = None


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8100
    data_dir: Path = Path("labelkit-data")
    tokens: list[TokenConfig] = field(default_factory=list)
    cors_origins: list[str] = field(default_factory=list)
    ui_dir: Path | None = None

    @classmethod
    def load(cls, config_path: Path | None = None, env: dict | None = None) -> "ServerConfig":
        """Build config from file and environment; env vars win."""
        env = os.environ if env is None else env
        data: dict = {}
        if config_path is not None:
            data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        host = env.get("LABELKIT_HOST", data.get("host", cls.host))
        port = int(env.get("LABELKIT_PORT", data.get("port", cls.port)))
        data_dir = Path(env.get("LABELKIT_DATA_DIR", data.get("data_dir", "labelkit-data")))
        tokens_raw = data.get("tokens", [])
        if "LABELKIT_TOKENS" in env:
            tokens_raw = json.loads(env["LABELKIT_TOKENS"])
        tokens = [
            TokenConfig(
                token=t["token"],
                role=t.get("role", "annotator"),
                name=t.get("name", ""),
                annotator_id=t.get("annotator_id"),
            )
            for t in tokens_raw
        ]
        cors = data.get("cors_origins", [])
        if "LABELKIT_CORS_ORIGINS" in env:
            cors = [o for o in env["LABELKIT_CORS_ORIGINS"].split(",") if o]
        ui_dir = data.get("ui_dir")
        if "LABELKIT_UI_DIR" in env:
            ui_dir = env["LABELKIT_UI_DIR"]
        return cls(host, port, data_dir, tokens, cors, Path(ui_dir) if ui_dir else None)


@dataclass(frozen=True)
class Identity:
    role: str
    name: str
    annotator_id: str | None


_ERROR_STATUS: list[tuple[type, int]] = [
    (MalformedDataset, 400),
    (InvalidPayload, 400),
    (InvalidRegex, 400),
    (RedundancyExceedsTeam, 400),
    (NotTeamMember, 403),
    (TaskNotLeased, 409),
    (ConflictsWithAccepted, 409),
    (WrongJobKind, 409),
    (NoGold, 409),
    (UnknownDataset, 404),
    (UnknownExample, 404),
    (UnknownSchema, 404),
    (UnknownAnnotator, 404),
    (UnknownTeam, 404),
    (UnknownJob, 404),
    (UnknownTask, 404),
    (UnknownIdeal, 404),
    (LabelkitError, 400),
]


# ---------------------------------------------------------------------------
# Request bodies


class TeamCreate(BaseModel):
    name: str
    members: list[str]


class AnnotatorCreate(BaseModel):
    id: Optional[str] = None
    display_name: str
    kind: str = "human"


class JobCreate(BaseModel):
    dataset_id: str
    schema_id: str
    team_id: str
    redundancy: int
    seed: int = 0


class JobStateBody(BaseModel):
    state: str


class SubmitBody(BaseModel):
    payloads: list[dict] = []
    accepted_preannotations: list[str] = []
    rejected_preannotations: list[str] = []


class VerdictBody(BaseModel):
    job_id: str


class BatchAcceptBody(BaseModel):
    threshold: float


class LexicalReviewBody(BaseModel):
    surface: str
    tag: str
    verdict: str
    scope: str = "all"


class RegexRule(BaseModel):
    pattern: str
    tag: str
    id: Optional[str] = None
    case_sensitive: bool = True


class RegexPreannotateBody(BaseModel):
    rules: list[RegexRule]


def _enum(kind, value, what: str):
    try:
        return kind(value)
    except ValueError:
        raise HTTPException(400, f"invalid {what}: {value!r}")


def _task_json(task: Task) -> dict:
    return {
        "id": task.id,
        "job_id": task.job_id,
        "annotator_id": task.annotator_id,
        "example_id": task.example_id,
        "state": task.state.value,
    }


def create_app(config: ServerConfig, store: Store | None = None) -> FastAPI:
    """Build the application; pass a prebuilt store for deterministic tests."""
    if store is None:
        config.data_dir.mkdir(parents=True, exist_ok=True)
        store = Store(config.data_dir / "labelkit.db")

    tokens = {t.token: Identity(t.role, t.name, t.annotator_id) for t in config.tokens}
    # identities named in the token list exist as annotators from the start
    for t in config.tokens:
        if t.annotator_id is not None:
            try:
                store.get_annotator(t.annotator_id)
            except UnknownAnnotator:
                store.insert_annotator(Annotator(t.annotator_id, t.name or t.annotator_id))

    app = FastAPI(title="labelkit", version="0.1.0")
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    indexes: dict[str, trigram.TrigramIndex] = {}
    index_lock = threading.Lock()

    def get_index(dataset_id: str) -> trigram.TrigramIndex:
        with index_lock:
            if dataset_id not in indexes:
                indexes[dataset_id] = trigram.build_index(store.get_dataset(dataset_id))
            return indexes[dataset_id]

    def authenticate(authorization: str = Header(default="")) -> Identity:
        if not authorization.startswith("Bearer "):
            raise HTTPException(401, "missing bearer token")
        identity = tokens.get(authorization.removeprefix("Bearer "))
        if identity is None:
            raise HTTPException(401, "unknown token")
        return identity

    def manager(identity: Identity = Depends(authenticate)) -> Identity:
        if identity.role != "manager":
            raise HTTPException(403, "manager role required")
        return identity

    def annotating(identity: Identity = Depends(authenticate)) -> Identity:
        if identity.annotator_id is None:
            raise HTTPException(403, "token has no annotator identity")
        return identity

    @app.exception_handler(LabelkitError)
    def domain_error(request: Request, exc: LabelkitError):
        for kind, status in _ERROR_STATUS:
            if isinstance(exc, kind):
                detail: dict[str, Any] = {"error": type(exc).__name__, "detail": str(exc)}
                if isinstance(exc, MalformedDataset):
                    detail["problems"] = exc.problems
                if isinstance(exc, ConflictsWithAccepted):
                    detail["ideal_id"] = exc.ideal_id
                    detail["accepted_ideal_ids"] = exc.accepted_ideal_ids
                return JSONResponse(status_code=status, content=detail)
        raise exc  # pragma: no cover

    # ------------------------------------------------------------------
    # Identities and teams

    @app.post("/annotators", status_code=201)
    def create_annotator(body: AnnotatorCreate, _: Identity = Depends(manager)):
        annotator = Annotator(
            body.id or store.new_id(), body.display_name,
            _enum(AnnotatorKind, body.kind, "annotator kind"),
        )
        store.insert_annotator(annotator)
        return {"annotator_id": annotator.id}

    @app.post("/teams", status_code=201)
    def create_team(body: TeamCreate, _: Identity = Depends(manager)):
        team = Team(store.new_id(), body.name, body.members)
        store.insert_team(team)
        return {"team_id": team.id}

    # ------------------------------------------------------------------
    # Datasets and schemas

    @app.post("/datasets", status_code=201)
    def upload_dataset(
        payload: Any = Body(...),
        name: str = Query(default="dataset"),
        _: Identity = Depends(manager),
    ):
        dataset = parse_dataset_upload(payload, name=name, new_id=store.new_id)
        store.insert_dataset(dataset)
        with index_lock:
            indexes[dataset.id] = trigram.build_index(dataset)
        return {"dataset_id": dataset.id, "example_count": len(dataset.examples)}

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str, _: Identity = Depends(authenticate)):
        dataset = store.get_dataset(dataset_id)
        return {
            "id": dataset.id,
            "name": dataset.name,
            "example_count": len(dataset.examples),
            "context_config": (
                {"group_by": dataset.context_config.group_by,
                 "sort_by": dataset.context_config.sort_by}
                if dataset.context_config else None
            ),
        }

    @app.get("/datasets/{dataset_id}/examples/{example_id}/context")
    def example_context(
        dataset_id: str, example_id: str, _: Identity = Depends(authenticate)
    ):
        """The example plus, when context display is configured, its metadata group."""
        dataset = store.get_dataset(dataset_id)
        target = next((e for e in dataset.examples if e.id == example_id), None)
        if target is None:
            raise UnknownExample(example_id)
        group = [target]
        if dataset.context_config is not None:
            key = dataset.context_config.group_by
            sort = dataset.context_config.sort_by
            if key in target.metadata:
                group = [
                    e for e in dataset.examples
                    if e.metadata.get(key) == target.metadata[key]
                ]
                group.sort(key=lambda e: (e.metadata.get(sort) is None, e.metadata.get(sort)))
        return {
            "example_id": example_id,
            "group": [
                {"id": e.id, "content": e.content, "metadata": e.metadata, "editable": e.id == example_id}
                for e in group
            ],
        }

    @app.post("/schemas", status_code=201)
    def upload_schema(payload: Any = Body(...), _: Identity = Depends(manager)):
        schema = parse_schema_upload(payload, new_id=store.new_id)
        store.insert_schema(schema)
        return {"schema_id": schema.id}

    @app.get("/schemas/{schema_id}")
    def get_schema(schema_id: str, _: Identity = Depends(authenticate)):
        schema = store.get_schema(schema_id)
        return {
            "id": schema.id,
            "name": schema.name,
            "entity_tags": [
                {"id": t.id, "name": t.name, "color": t.color} for t in schema.entity_tags
            ],
            "classes": schema.classes,
            "classification_mode": schema.classification_mode.value,
            "relation_types": schema.relation_types,
            "allows_nonterminals": schema.allows_nonterminals,
        }

    # ------------------------------------------------------------------
    # Jobs and tasks

    @app.post("/jobs", status_code=201)
    def create_job(body: JobCreate, _: Identity = Depends(manager)):
        job = scheduler.create_job(
            store, body.dataset_id, body.schema_id, body.team_id, body.redundancy,
            seed=body.seed,
        )
        return {"job_id": job.id}

    @app.get("/jobs")
    def list_jobs(_: Identity = Depends(manager)):
        return {
            "jobs": [
                {
                    "id": j.id, "dataset_id": j.dataset_id, "schema_id": j.schema_id,
                    "team_id": j.team_id, "redundancy": j.redundancy, "state": j.state.value,
                }
                for j in store.list_jobs()
            ]
        }

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str, _: Identity = Depends(authenticate)):
        job = store.get_job(job_id)
        return {
            "id": job.id, "dataset_id": job.dataset_id, "schema_id": job.schema_id,
            "team_id": job.team_id, "redundancy": job.redundancy, "state": job.state.value,
        }

    @app.post("/jobs/{job_id}/state")
    def set_job_state(job_id: str, body: JobStateBody, _: Identity = Depends(manager)):
        store.get_job(job_id)
        store.set_job_state(job_id, _enum(JobState, body.state, "job state"))
        return {"job_id": job_id, "state": body.state}

    def _preannotations_json(job_id: str, example_id: str) -> list[dict]:
        out = []
        for pre in store.preannotations_for_example(job_id, example_id):
            ideal = store.get_ideal(pre.ideal_id)
            out.append(
                {
                    "id": pre.id,
                    "ideal_id": pre.ideal_id,
                    "origin": pre.origin,
                    "state": pre.state.value,
                    "payload": payload_to_dict(ideal.payload),
                }
            )
        return out

    @app.post("/jobs/{job_id}/tasks/next")
    def lease_next_task(job_id: str, identity: Identity = Depends(annotating)):
        task = scheduler.next_task(store, job_id, identity.annotator_id)
        if task is None:
            return {"task": None}
        example = store.get_example(task.example_id)
        job = store.get_job(job_id)
        return {
            "task": _task_json(task),
            "example": {"id": example.id, "content": example.content, "metadata": example.metadata},
            "schema_id": job.schema_id,
            "dataset_id": job.dataset_id,
            "preannotations": [
                p for p in _preannotations_json(job_id, task.example_id)
                if p["state"] == PreAnnotationState.PENDING.value
            ],
        }

    @app.get("/jobs/{job_id}/tasks/mine")
    def my_tasks(job_id: str, identity: Identity = Depends(annotating)):
        """The calling annotator's tasks in this job, keyed for search-driven
        annotation (find an example, then open its task)."""
        store.get_job(job_id)
        return {
            "tasks": [
                _task_json(t)
                for t in store.tasks_for_job(job_id)
                if t.annotator_id == identity.annotator_id
            ]
        }

    @app.post("/tasks/{task_id}/lease")
    def lease_task(task_id: str, identity: Identity = Depends(annotating)):
        """Lease a specific pending task (rather than the scheduler's pick);
        used when annotators navigate by search."""
        task = store.get_task(task_id)
        if task.annotator_id != identity.annotator_id:
            raise HTTPException(403, "not your task")
        with store.transaction():
            task = store.get_task(task_id)
            if task.state is TaskState.SUBMITTED:
                raise TaskNotLeased(f"task {task_id} is already submitted")
            store.set_task_state(task_id, TaskState.LEASED)
        return {"task": _task_json(store.get_task(task_id))}

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str, identity: Identity = Depends(authenticate)):
        task = store.get_task(task_id)
        if identity.role != "manager" and identity.annotator_id != task.annotator_id:
            raise HTTPException(403, "not your task")
        example = store.get_example(task.example_id)
        job = store.get_job(task.job_id)
        return {
            "task": _task_json(task),
            "example": {"id": example.id, "content": example.content, "metadata": example.metadata},
            "schema_id": job.schema_id,
            "dataset_id": job.dataset_id,
            "preannotations": _preannotations_json(task.job_id, task.example_id),
        }

    @app.post("/tasks/{task_id}/submit")
    def submit_task(task_id: str, body: SubmitBody, identity: Identity = Depends(annotating)):
        payloads = [payload_from_dict(p) for p in body.payloads]
        receipt = scheduler.submit_task(
            store, task_id, identity.annotator_id, payloads,
            body.accepted_preannotations, body.rejected_preannotations,
        )
        return {
            "task_id": receipt.task_id,
            "event_ids": list(receipt.event_ids),
            "ideal_ids": list(receipt.ideal_ids),
            "accepted_preannotation_ids": list(receipt.accepted_preannotation_ids),
        }

    @app.post("/tasks/{task_id}/revoke-lease")
    def revoke_lease(task_id: str, _: Identity = Depends(manager)):
        return {"task": _task_json(scheduler.revoke_lease(store, task_id))}

    @app.post("/jobs/{job_id}/reprioritize")
    def reprioritize(job_id: str, _: Identity = Depends(manager)):
        return {"priorities": scheduler.reprioritize_by_agreement(store, job_id)}

    # ------------------------------------------------------------------
    # Search

    @app.get("/datasets/{dataset_id}/search")
    def search_dataset(
        dataset_id: str,
        q: str,
        regex: bool = True,
        case_sensitive: bool = False,
        limit: int = 50,
        offset: int = 0,
        _: Identity = Depends(authenticate),
    ):
        if not store.dataset_exists(dataset_id):
            raise UnknownDataset(dataset_id)
        pattern = q if regex else re.escape(q)
        result = trigram.search(
            get_index(dataset_id), pattern,
            case_sensitive=case_sensitive, limit=limit, offset=offset,
        )
        contents = {h.example_id: get_index(dataset_id).content(h.example_id) for h in result.hits}
        return {
            "format_version": FORMAT_VERSION,
            "total": result.total,
            "examined": result.examined,
            "results": [
                {
                    "example_id": h.example_id,
                    "spans": [list(s) for s in h.spans],
                    "content": contents[h.example_id],
                }
                for h in result.hits
            ],
        }

    # ------------------------------------------------------------------
    # Review

    @app.get("/jobs/{job_id}/review/{example_id}")
    def review_example(
        job_id: str, example_id: str, scope: str = "all", _: Identity = Depends(manager)
    ):
        view = review.consolidate(store, job_id, example_id, _enum(ReviewScope, scope, "scope"))
        example = store.get_example(example_id)
        return {
            "example_id": view.example_id,
            "content": example.content,
            "seen": view.seen,
            "groups": [
                {
                    "ideal_id": g.ideal.id,
                    "payload": payload_to_dict(g.ideal.payload),
                    "event_count": g.event_count,
                    "annotator_ids": g.annotator_ids,
                    "judgment": (
                        {"verdict": g.judgment.verdict.value, "cause": g.judgment.cause.value}
                        if g.judgment else None
                    ),
                }
                for g in view.groups
            ],
            "conflicts": [list(pair) for pair in view.conflicts],
        }

    @app.post("/ideals/{ideal_id}/accept")
    def accept_ideal(ideal_id: str, body: VerdictBody, identity: Identity = Depends(manager)):
        judgment, rejections = review.accept_ideal(
            store, body.job_id, ideal_id, identity.name or "manager"
        )
        return {
            "judgment": {"ideal_id": ideal_id, "verdict": judgment.verdict.value},
            "transitive_rejections": [r.ideal_id for r in rejections],
        }

    @app.post("/ideals/{ideal_id}/reject")
    def reject_ideal(ideal_id: str, body: VerdictBody, identity: Identity = Depends(manager)):
        judgment = review.reject_ideal(store, body.job_id, ideal_id, identity.name or "manager")
        return {"judgment": {"ideal_id": ideal_id, "verdict": judgment.verdict.value}}

    @app.post("/jobs/{job_id}/batch-accept")
    def batch_accept(job_id: str, body: BatchAcceptBody, identity: Identity = Depends(manager)):
        try:
            accepted = review.batch_accept_threshold(
                store, job_id, body.threshold, identity.name or "manager"
            )
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return {"accepted": accepted}

    @app.get("/jobs/{job_id}/lexical-groups")
    def lexical_groups(job_id: str, scope: str = "all", _: Identity = Depends(manager)):
        judgments = store.live_judgments(job_id)
        groups = review.lexical_groups(store, job_id, _enum(ReviewScope, scope, "scope"))
        return {
            "groups": [
                {
                    "surface": g.surface,
                    "tag": g.tag,
                    "ideal_ids": g.ideal_ids,
                    "event_count": g.event_count,
                    "pending_ideal_ids": [i for i in g.ideal_ids if i not in judgments],
                }
                for g in groups
            ]
        }

    @app.post("/jobs/{job_id}/lexical-groups/review")
    def review_lexical_group(
        job_id: str, body: LexicalReviewBody, identity: Identity = Depends(manager)
    ):
        groups = review.lexical_groups(store, job_id, _enum(ReviewScope, body.scope, "scope"))
        group = next((g for g in groups if g.surface == body.surface and g.tag == body.tag), None)
        if group is None:
            raise UnknownIdeal(f"no lexical group ({body.surface!r}, {body.tag!r})")
        judgments = review.batch_review_lexical(
            store, job_id, group.ideal_ids, _enum(Verdict, body.verdict, "verdict"),
            identity.name or "manager"
        )
        return {"judgments": len(judgments)}

    # ------------------------------------------------------------------
    # Analytics

    @app.get("/jobs/{job_id}/metrics")
    def metrics(job_id: str, _: Identity = Depends(manager)):
        job = store.get_job(job_id)
        team = store.get_team(job.team_id)
        pairwise = {
            a: {
                b: analytics.pairwise_span_agreement(store, job_id, a, b)
                for b in team.members
                if b != a
            }
            for a in team.members
        }
        try:
            agreement = analytics.classification_agreement(store, job_id)
            classification = {
                "percent_agreement": agreement.percent_agreement,
                "kappa": agreement.kappa,
                "kappa_by_rater_count": {
                    str(n): k for n, k in agreement.kappa_by_rater_count.items()
                },
            }
        except WrongJobKind:
            classification = None
        gold: dict[str, Any] | None = {}
        for member in team.members:
            try:
                pr = analytics.precision_recall(store, job_id, member)
            except NoGold:
                gold = None
                break
            gold[member] = {
                "true_positives": pr.true_positives,
                "false_positives": pr.false_positives,
                "false_negatives": pr.false_negatives,
                "precision": pr.precision,
                "recall": pr.recall,
                "f1": pr.f1,
            }
        return {
            "format_version": FORMAT_VERSION,
            "job_id": job_id,
            "pairwise_span_f1": pairwise,
            "classification": classification,
            "precision_recall": gold,
        }

    @app.get("/jobs/{job_id}/progress")
    def progress(job_id: str, window_minutes: int = 60, _: Identity = Depends(manager)):
        report = analytics.progress(store, job_id, window_minutes=window_minutes)
        return {
            "format_version": FORMAT_VERSION,
            "job_id": job_id,
            "tasks_total": report.tasks_total,
            "tasks_submitted": report.tasks_submitted,
            "submitted_by_annotator": report.submitted_by_annotator,
            "events_in_window": report.events_in_window,
            "events_per_hour": report.events_per_hour,
            "window_minutes": report.window_minutes,
        }

    # ------------------------------------------------------------------
    # Pre-annotations

    @app.post("/jobs/{job_id}/preannotations")
    def upload_preannotations(
        job_id: str, payload: Any = Body(...), _: Identity = Depends(manager)
    ):
        if isinstance(payload, dict):
            payload = payload.get("rows")
        if not isinstance(payload, list):
            raise MalformedDataset(["pre-annotation upload must be a JSON array of rows"])
        job = store.get_job(job_id)
        schema = store.get_schema(job.schema_id)
        created = 0
        with store.transaction():
            problems: list[str] = []
            for index, row in enumerate(payload):
                where = f"rows[{index}]"
                if not isinstance(row, dict):
                    problems.append(f"{where}: must be an object")
                    continue
                try:
                    example = store.get_example(str(row.get("example_id")))
                    if store.example_dataset(example.id) != job.dataset_id:
                        raise InvalidPayload("example is not in the job's dataset")
                    parsed = payload_from_dict(row.get("payload"))
                    canonical = validate_payload(
                        example, parsed, schema, span_ideal_ids=store.span_ideal_ids(example.id)
                    )
                except (UnknownExample, InvalidPayload) as exc:
                    problems.append(f"{where}: {exc}")
                    continue
                ideal_id, _new = store.intern_ideal(example.id, canonical)
                _pre, was_created = store.upsert_preannotation(
                    job_id, ideal_id, str(row.get("origin", "upload"))
                )
                created += was_created
            if problems:
                raise MalformedDataset(problems)  # rolls the whole upload back
        return {"rows": len(payload), "created": created}

    @app.post("/jobs/{job_id}/preannotators/regex")
    def run_regex_preannotator(
        job_id: str, body: RegexPreannotateBody, _: Identity = Depends(manager)
    ):
        job = store.get_job(job_id)
        schema = store.get_schema(job.schema_id)
        for i, rule in enumerate(body.rules):
            try:
                trigram.compile_pattern(rule.pattern, case_sensitive=rule.case_sensitive)
            except InvalidRegex as exc:
                raise InvalidRegex(f"rules[{i}]: {exc}") from exc
            if rule.tag not in schema.tag_ids():
                raise InvalidPayload(f"rules[{i}]: unknown entity tag {rule.tag!r}")
        index = get_index(job.dataset_id)
        counts: dict[str, int] = {}
        with store.transaction():
            for i, rule in enumerate(body.rules):
                rule_id = rule.id or f"regex-rule-{i}"
                created = 0
                result = trigram.search(index, rule.pattern, case_sensitive=rule.case_sensitive)
                for hit in result.hits:
                    example = store.get_example(hit.example_id)
                    for start, end in hit.spans:
                        if start == end:  # zero-width match
                            continue
                        try:
                            nstart, nend = normalize_span(example.content, start, end)
                        except EmptyAfterTrim:
                            continue
                        ideal_id, _new = store.intern_ideal(
                            example.id, SpanPayload(nstart, nend, rule.tag)
                        )
                        _pre, was_created = store.upsert_preannotation(job_id, ideal_id, rule_id)
                        created += was_created
                counts[rule_id] = created
        return {"created": counts, "total": sum(counts.values())}

    # ------------------------------------------------------------------
    # Export

    @app.get("/jobs/{job_id}/export")
    def export_job(job_id: str, mode: str = "all", _: Identity = Depends(manager)):
        if mode not in ("all", "accepted-only"):
            raise HTTPException(400, f"unknown export mode {mode!r}")
        store.get_job(job_id)

        def stream():
            for line in exports.export_lines(store, job_id, mode):
                yield line + "\n"

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    if config.ui_dir is not None and config.ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(config.ui_dir), html=True), name="ui")

    return app
