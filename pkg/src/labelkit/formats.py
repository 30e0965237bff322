"""Parsing and validation of the dataset and schema interchange formats.

A dataset upload is a JSON array of {"id"?, "content", "metadata"?} objects,
optionally wrapped in {"format_version": 1, "examples": [...], ...}. A schema
definition mirrors the Schema type. Validation failures raise
MalformedDataset with one diagnostic per offending row/field.
"""

from __future__ import annotations

from typing import Callable

from labelkit.errors import MalformedDataset
from labelkit.model import (
    ClassificationMode,
    ContextConfig,
    Dataset,
    EntityTag,
    Example,
    Schema,
)

_SCALARS = (str, int, float, bool)


def parse_dataset_upload(
    payload: object,
    *,
    name: str,
    new_id: Callable[[], str],
    context_config: object = None,
) -> Dataset:
    """Validate an upload and build a Dataset; missing example ids are generated."""
    problems: list[str] = []
    if isinstance(payload, dict):
        context_config = payload.get("context_config", context_config)
        name = payload.get("name", name)
        payload = payload.get("examples")
    if not isinstance(payload, list):
        raise MalformedDataset(["dataset must be a JSON array of examples"])
    if not payload:
        raise MalformedDataset(["dataset contains no examples"])

    examples: list[Example] = []
    seen_ids: set[str] = set()
    for index, item in enumerate(payload):
        where = f"examples[{index}]"
        if not isinstance(item, dict):
            problems.append(f"{where}: must be an object")
            continue
        content = item.get("content")
        if not isinstance(content, str) or not content:
            problems.append(f"{where}: content must be a non-empty string")
            continue
        example_id = item.get("id")
        if example_id is None:
            example_id = new_id()
        elif not isinstance(example_id, str) or not example_id:
            problems.append(f"{where}: id must be a non-empty string when present")
            continue
        if example_id in seen_ids:
            problems.append(f"{where}: duplicate example id {example_id!r}")
            continue
        metadata = item.get("metadata", {})
        if not isinstance(metadata, dict):
            problems.append(f"{where}: metadata must be an object")
            continue
        bad = [
            k for k, v in metadata.items()
            if not isinstance(k, str) or not isinstance(v, _SCALARS)
        ]
        if bad:
            problems.append(f"{where}: metadata values must be scalars (bad keys: {bad})")
            continue
        seen_ids.add(example_id)
        examples.append(Example(example_id, content, dict(metadata)))

    parsed_config = None
    if context_config is not None:
        if (
            not isinstance(context_config, dict)
            or not isinstance(context_config.get("group_by"), str)
            or not isinstance(context_config.get("sort_by"), str)
        ):
            problems.append("context_config: must be {group_by, sort_by} of metadata keys")
        else:
            parsed_config = ContextConfig(context_config["group_by"], context_config["sort_by"])
            present = {k for ex in examples for k in ex.metadata}
            for key in (parsed_config.group_by, parsed_config.sort_by):
                if key not in present:
                    problems.append(
                        f"context_config: key {key!r} not present in any example metadata"
                    )
    if problems:
        raise MalformedDataset(problems)
    return Dataset(new_id(), name, examples, parsed_config)


def parse_schema_upload(payload: object, *, new_id: Callable[[], str]) -> Schema:
    problems: list[str] = []
    if not isinstance(payload, dict):
        raise MalformedDataset(["schema must be a JSON object"])
    name = payload.get("name")
    if not isinstance(name, str) or not name:
        problems.append("name: must be a non-empty string")
        name = ""

    tags: list[EntityTag] = []
    for index, item in enumerate(payload.get("entity_tags", [])):
        where = f"entity_tags[{index}]"
        if not isinstance(item, dict) or not isinstance(item.get("id"), str):
            problems.append(f"{where}: must be an object with a string id")
            continue
        tags.append(EntityTag(item["id"], item.get("name", item["id"]), item.get("color")))
    if len({t.id for t in tags}) != len(tags):
        problems.append("entity_tags: tag ids must be unique")

    classes = payload.get("classes", [])
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        problems.append("classes: must be a list of strings")
        classes = []
    if len(set(classes)) != len(classes):
        problems.append("classes: class ids must be unique")

    mode_raw = payload.get("classification_mode", "single-label")
    try:
        mode = ClassificationMode(mode_raw)
    except ValueError:
        problems.append(f"classification_mode: unknown mode {mode_raw!r}")
        mode = ClassificationMode.SINGLE_LABEL

    relation_types = payload.get("relation_types", [])
    if not isinstance(relation_types, list) or not all(isinstance(r, str) for r in relation_types):
        problems.append("relation_types: must be a list of strings")
        relation_types = []

    if problems:
        raise MalformedDataset(problems)
    return Schema(
        id=new_id(),
        name=name,
        entity_tags=tags,
        classes=list(classes),
        classification_mode=mode,
        relation_types=list(relation_types),
        allows_nonterminals=bool(payload.get("allows_nonterminals", False)),
    )
