"""Scripted end-to-end scenario driven entirely through the HTTP API.

Twenty documents are uploaded, a schema and a three-person team are created,
a redundancy-2 job is planned, regex pre-annotation runs, every annotator
works through their queue (accepting pre-annotations and adding spans and a
document class), a threshold review batch-accepts, and the job is exported.
With the deterministic store wiring the resulting JSONL is byte-stable and
checked against tests/golden/e2e_export.jsonl.

Run this file directly to regenerate the golden file.
"""

from __future__ import annotations

from pathlib import Path

from fastapi.testclient import TestClient

from helpers import make_store
from labelkit.server import ServerConfig, TokenConfig, create_app
from labelkit.store import Store

GOLDEN = Path(__file__).parent / "golden" / "e2e_export.jsonl"

MANAGER = {"Authorization": "Bearer boss"}
ANNOTATORS = {
    "ann1": {"Authorization": "Bearer tok1"},
    "ann2": {"Authorization": "Bearer tok2"},
    "ann3": {"Authorization": "Bearer tok3"},
}

DOCS = [
    "ACME Corp announced merger talks with Globex today",
    "the White House issued a statement on trade",
    "podcast episode twelve features ACME Corp executives",
    "nothing notable happened in the markets",
    "merger talks stalled after the White House comment",
    "Globex denies any merger with ACME Corp",
    "federal register notice about foreign policy",
    "sponsors of the show include ACME Corp",
    "weather remains pleasant and entirely irrelevant",
    "the White House press briefing ran long",
    "analysts expect the merger to close quickly",
    "ACME Corp quarterly earnings beat expectations",
    "a quiet day with no corporate news",
    "foreign policy experts cited the federal register",
    "the podcast host thanked ACME Corp for sponsoring",
    "White House staff declined to comment",
    "Globex shareholders approve the merger plan",
    "local bakery wins regional bread award",
    "ACME Corp stock rose after the announcement",
    "editors reviewed the federal register all afternoon",
]

SCHEMA = {
    "name": "corporate-events",
    "entity_tags": [
        {"id": "BRAND", "name": "Brand", "color": "#e8b339"},
        {"id": "PLACE", "name": "Place", "color": "#4a90d9"},
        {"id": "EVENT", "name": "Event"},
    ],
    "classes": ["relevant", "irrelevant"],
    "classification_mode": "single-label",
}


def _annotator_payloads(annotator: str, content: str) -> list[dict]:
    """Deterministic per-annotator behavior, with one engineered disagreement:
    ann1 and ann2 tag different overlapping spans of "merger talks"."""
    payloads: list[dict] = [
        {
            "kind": "class",
            "class_id": "relevant" if "ACME" in content or "merger" in content else "irrelevant",
        }
    ]
    if "merger talks" in content:
        start = content.index("merger talks")
        if annotator == "ann1":
            payloads.append({"kind": "span", "start": start, "end": start + 12, "tag": "EVENT"})
        elif annotator == "ann2":
            payloads.append({"kind": "span", "start": start, "end": start + 6, "tag": "EVENT"})
    if "federal register" in content and annotator != "ann3":
        start = content.index("federal register")
        payloads.append({"kind": "span", "start": start, "end": start + 16, "tag": "PLACE"})
    return payloads


def run_scenario() -> tuple[bytes, Store, str]:
    """Returns (export bytes, the live store, job id) for further checks."""
    store = make_store(seed=2024)
    config = ServerConfig(
        tokens=[
            TokenConfig("boss", "manager", name="boss"),
            TokenConfig("tok1", "annotator", name="ann1", annotator_id="ann1"),
            TokenConfig("tok2", "annotator", name="ann2", annotator_id="ann2"),
            TokenConfig("tok3", "annotator", name="ann3", annotator_id="ann3"),
        ]
    )
    client = TestClient(create_app(config, store=store))

    examples = [{"id": f"doc{i:02d}", "content": text} for i, text in enumerate(DOCS)]
    dataset_id = client.post(
        "/datasets?name=newsfeed", json=examples, headers=MANAGER
    ).json()["dataset_id"]
    schema_id = client.post("/schemas", json=SCHEMA, headers=MANAGER).json()["schema_id"]
    team_id = client.post(
        "/teams", json={"name": "desk", "members": list(ANNOTATORS)}, headers=MANAGER
    ).json()["team_id"]
    job_id = client.post(
        "/jobs",
        json={"dataset_id": dataset_id, "schema_id": schema_id, "team_id": team_id,
              "redundancy": 2, "seed": 42},
        headers=MANAGER,
    ).json()["job_id"]

    pre = client.post(
        f"/jobs/{job_id}/preannotators/regex",
        json={"rules": [
            {"pattern": "ACME Corp", "tag": "BRAND", "id": "brand-rule"},
            {"pattern": "White House", "tag": "PLACE", "id": "place-rule"},
        ]},
        headers=MANAGER,
    ).json()
    assert pre["total"] == 11, pre  # 7 ACME Corp + 4 White House mentions

    for annotator, headers in ANNOTATORS.items():
        while True:
            leased = client.post(f"/jobs/{job_id}/tasks/next", headers=headers).json()
            if leased["task"] is None:
                break
            response = client.post(
                f"/tasks/{leased['task']['id']}/submit",
                json={
                    "payloads": _annotator_payloads(annotator, leased["example"]["content"]),
                    "accepted_preannotations": [p["id"] for p in leased["preannotations"]],
                },
                headers=headers,
            )
            assert response.status_code == 200, response.text

    accepted = client.post(
        f"/jobs/{job_id}/batch-accept", json={"threshold": 0.5}, headers=MANAGER
    ).json()["accepted"]
    assert accepted > 0

    export = client.get(f"/jobs/{job_id}/export", headers=MANAGER)
    return export.content, store, job_id


if __name__ == "__main__":
    data, _store, _job = run_scenario()
    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN.write_bytes(data)
    print(f"wrote {GOLDEN} ({len(data)} bytes, {data.count(chr(10).encode())} lines)")
