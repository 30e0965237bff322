"""Trigram-indexed plain-text and regular-expression search.

The index maps every window of 3 consecutive code points of lower-cased
content to the documents containing it. A regex is planned into an AND/OR
tree over trigrams that over-approximates the set of matching documents
(never excludes a true match); candidates are then verified by real regex
evaluation, so results are identical to a naive per-document scan while
examining far fewer documents for selective queries.

The supported dialect is the regular subset of Python syntax: literals,
classes, anchors, repeats, groups and alternation. Backreferences,
conditionals and lookarounds are rejected so patterns stay matchable by a
linear-time engine.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Union

try:  # renamed to re._parser in 3.11+
    import sre_parse as _sre
    import sre_constants as _sc
except ImportError:  # pragma: no cover
    import re._parser as _sre  # type: ignore[no-redef]
    import re._constants as _sc  # type: ignore[no-redef]

from labelkit.errors import DuplicateExample, InvalidRegex
from labelkit.model import Dataset, Example

_FORBIDDEN = {
    _sc.GROUPREF: "backreferences",
    _sc.GROUPREF_EXISTS: "conditional groups",
    _sc.ASSERT: "lookahead assertions",
    _sc.ASSERT_NOT: "negative lookarounds",
}


# ---------------------------------------------------------------------------
# Query plan tree


@dataclass(frozen=True)
class AnyNode:
    """No trigram constraint: every document is a candidate."""


@dataclass(frozen=True)
class TrigramNode:
    trigram: str


@dataclass(frozen=True)
class AndNode:
    children: tuple["TrigramQuery", ...]


@dataclass(frozen=True)
class OrNode:
    children: tuple["TrigramQuery", ...]


TrigramQuery = Union[AnyNode, TrigramNode, AndNode, OrNode]

ANY = AnyNode()


def trigrams(text: str) -> list[str]:
    """All length-3 windows of `text`, lower-cased, deduplicated in order."""
    lowered = text.lower()
    seen: dict[str, None] = {}
    for i in range(len(lowered) - 2):
        seen.setdefault(lowered[i : i + 3])
    return list(seen)


# ---------------------------------------------------------------------------
# Index


class TrigramIndex:
    """Posting lists for one dataset; lists stay ordered by document upload order."""

    def __init__(self, dataset_id: str):
        self.dataset_id = dataset_id
        self.postings: dict[str, list[str]] = {}
        self._contents: dict[str, str] = {}
        self._order: dict[str, int] = {}
        self._mutate = threading.Lock()

    @property
    def doc_count(self) -> int:
        return len(self._contents)

    def example_ids(self) -> list[str]:
        return sorted(self._contents, key=self._order.__getitem__)

    def content(self, example_id: str) -> str:
        return self._contents[example_id]

    def add_example(self, example: Example) -> None:
        """Index one document; equivalent to a rebuild that includes it."""
        with self._mutate:
            if example.id in self._contents:
                raise DuplicateExample(example.id)
            self._order[example.id] = len(self._order)
            self._contents[example.id] = example.content
            for gram in trigrams(example.content):
                self.postings.setdefault(gram, []).append(example.id)


def build_index(dataset: Dataset) -> TrigramIndex:
    index = TrigramIndex(dataset.id)
    for example in dataset.examples:
        index.add_example(example)
    return index


# ---------------------------------------------------------------------------
# Planning

def _walk_forbidden(items) -> None:
    for op, av in items:
        if op in _FORBIDDEN:
            raise InvalidRegex(f"{_FORBIDDEN[op]} are not supported")
        if op is _sc.BRANCH:
            for branch in av[1]:
                _walk_forbidden(branch)
        elif op is _sc.SUBPATTERN:
            _walk_forbidden(av[3])
        elif op in (_sc.MAX_REPEAT, _sc.MIN_REPEAT):
            _walk_forbidden(av[2])


def _parse(pattern: str):
    try:
        return _sre.parse(pattern)
    except re.error as exc:
        raise InvalidRegex(str(exc)) from exc


def compile_pattern(pattern: str, *, case_sensitive: bool = True) -> re.Pattern:
    """Compile after checking the pattern stays within the supported dialect."""
    _walk_forbidden(_parse(pattern))
    return re.compile(pattern, 0 if case_sensitive else re.IGNORECASE)


def _literal_plan(text: str) -> TrigramQuery:
    lowered = text.lower()
    if len(lowered) != len(text):  # case mapping shifted offsets; don't trust windows
        return ANY
    grams = trigrams(text)
    if not grams:
        return ANY
    return AndNode(tuple(TrigramNode(g) for g in grams))


def _combine_and(parts: list[TrigramQuery]) -> TrigramQuery:
    constraints: list[TrigramQuery] = []
    for part in parts:
        if isinstance(part, AnyNode):
            continue
        if isinstance(part, AndNode):
            constraints.extend(part.children)
        else:
            constraints.append(part)
    if not constraints:
        return ANY
    if len(constraints) == 1 and not isinstance(constraints[0], TrigramNode):
        return constraints[0]
    return AndNode(tuple(constraints))


def _plan_sequence(items) -> TrigramQuery:
    parts: list[TrigramQuery] = []
    run: list[str] = []

    def flush() -> None:
        if run:
            parts.append(_literal_plan("".join(run)))
            run.clear()

    for op, av in items:
        if op is _sc.LITERAL:
            run.append(chr(av))
        elif op is _sc.BRANCH:
            flush()
            branch_plans = [_plan_sequence(branch) for branch in av[1]]
            if any(isinstance(p, AnyNode) for p in branch_plans):
                parts.append(ANY)
            else:
                parts.append(OrNode(tuple(branch_plans)))
        elif op is _sc.SUBPATTERN:
            flush()
            parts.append(_plan_sequence(av[3]))
        elif op in (_sc.MAX_REPEAT, _sc.MIN_REPEAT):
            flush()
            lo, _hi, item = av
            if lo >= 1:  # repeated content occurs at least once
                parts.append(_plan_sequence(item))
        elif op is _sc.AT:
            flush()  # zero-width anchor: breaks the run, constrains nothing
        else:
            flush()  # class, dot, etc: no extractable literal
    flush()
    return _combine_and(parts)


def plan_query(pattern: str) -> TrigramQuery:
    """Plan a regex into a trigram query whose evaluation is a superset of the
    truly matching documents.

    Literal runs of length >= 3 become an AND over their trigrams;
    alternation becomes an OR of branch plans; anything without an
    extractable literal degrades to ANY. Trigrams are lower-cased, matching
    the index, so the plan serves both case modes.
    """
    tree = _parse(pattern)
    _walk_forbidden(tree)
    return _plan_sequence(tree)


def evaluate(index: TrigramIndex, query: TrigramQuery) -> set[str]:
    """Candidate document ids for a planned query."""
    if isinstance(query, AnyNode):
        return set(index._contents)
    if isinstance(query, TrigramNode):
        return set(index.postings.get(query.trigram, ()))
    if isinstance(query, AndNode):
        result: set[str] | None = None
        for child in query.children:
            ids = evaluate(index, child)
            result = ids if result is None else result & ids
            if not result:
                return set()
        return result if result is not None else set()
    union: set[str] = set()
    for child in query.children:
        union |= evaluate(index, child)
    return union


# ---------------------------------------------------------------------------
# Search


@dataclass(frozen=True)
class ExampleMatches:
    example_id: str
    spans: tuple[tuple[int, int], ...]


@dataclass
class SearchResult:
    hits: list[ExampleMatches]
    total: int  # matching documents before pagination
    examined: int  # candidate documents run through the verifier


def search(
    index: TrigramIndex,
    pattern: str,
    *,
    case_sensitive: bool = True,
    limit: int | None = None,
    offset: int = 0,
) -> SearchResult:
    """Regex search equal to a naive per-document scan, in upload order.

    Candidates from the trigram plan are verified with the compiled pattern
    before inclusion; spans are code-point offsets of every non-overlapping
    match.
    """
    rx = compile_pattern(pattern, case_sensitive=case_sensitive)
    candidates = evaluate(index, plan_query(pattern))
    hits: list[ExampleMatches] = []
    for example_id in sorted(candidates, key=index._order.__getitem__):
        spans = tuple((m.start(), m.end()) for m in rx.finditer(index.content(example_id)))
        if spans:
            hits.append(ExampleMatches(example_id, spans))
    total = len(hits)
    if limit is not None:
        hits = hits[offset : offset + limit]
    elif offset:
        hits = hits[offset:]
    return SearchResult(hits, total, len(candidates))
