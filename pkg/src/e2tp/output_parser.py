"""Syntactic parsing and semantic validation of second-step generator output.

Parsing is total: malformed fragments become invalid candidates with reasons
and never abort the pipeline. Conforming fragments are kept even when sibling
fragments in the same generation are malformed, since vote aggregation is
robust to missing candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .core import SENTIMENT_LABELS, IMPLICIT_VALUE, ElementKind, SentimentTuple, normalize_text
from .errors import MissingVocabulary
from .ingest import write_jsonl
from .step2 import MARKER_TUPLE_SEPARATOR, TUPLE_SEPARATOR, Step2Record, TaskPrompt, Template


@dataclass(frozen=True)
class ParsedCandidate:
    """One candidate tuple recovered from a generation, or a reject record."""

    tuple: SentimentTuple | None
    valid: bool
    reason: str | None = None
    source: Step2Record | None = None


def _tuple_from_fields(fields: dict[ElementKind, str]) -> SentimentTuple:
    return SentimentTuple(
        aspect=fields.get(ElementKind.ASPECT, ""),
        sentiment=fields.get(ElementKind.SENTIMENT, ""),
        category=fields.get(ElementKind.CATEGORY),
        opinion=fields.get(ElementKind.OPINION),
    )


def _reject(reason: str, source: Step2Record | None) -> ParsedCandidate:
    return ParsedCandidate(tuple=None, valid=False, reason=reason, source=source)


def _parse_plain_fragment(fragment: str, prompt: TaskPrompt, source: Step2Record | None) -> ParsedCandidate:
    parts = fragment.split(", ")
    if len(parts) != len(prompt.order):
        return _reject(f"expected {len(prompt.order)} fields, got {len(parts)}", source)
    fields: dict[ElementKind, str] = {}
    for kind, part in zip(prompt.order, parts):
        value = normalize_text(part)
        if not value:
            return _reject(f"empty {kind.value} value", source)
        fields[kind] = value
    return ParsedCandidate(tuple=_tuple_from_fields(fields), valid=True, source=source)


def _parse_marker_fragment(fragment: str, prompt: TaskPrompt, source: Step2Record | None) -> ParsedCandidate:
    positions: list[tuple[int, ElementKind]] = []
    for kind in prompt.order:
        marker = kind.marker
        first = fragment.find(marker)
        if first < 0:
            return _reject(f"missing marker {marker}", source)
        if fragment.find(marker, first + len(marker)) >= 0:
            return _reject(f"marker {marker} appears more than once", source)
        positions.append((first, kind))
    if [kind for _, kind in sorted(positions)] != list(prompt.order):
        return _reject("markers out of prompt order", source)
    if fragment[: positions[0][0]].strip():
        return _reject("content before first marker", source)
    fields: dict[ElementKind, str] = {}
    for i, (start, kind) in enumerate(positions):
        begin = start + len(kind.marker)
        end = positions[i + 1][0] if i + 1 < len(positions) else len(fragment)
        value = normalize_text(fragment[begin:end])
        if not value:
            return _reject(f"empty {kind.value} value", source)
        fields[kind] = value
    return ParsedCandidate(tuple=_tuple_from_fields(fields), valid=True, source=source)


def parse_step2_output(
    raw: str, prompt: TaskPrompt, source: Step2Record | None = None
) -> list[ParsedCandidate]:
    """Parse a generation against its prompt's syntactic format.

    The plain template splits tuples on " | " and fields on ", ", requiring
    exact arity; the marker template splits on " [SSEP] " and requires each
    expected marker exactly once, in prompt order. Empty raw output yields an
    empty candidate list.
    """
    if not raw or not raw.strip():
        return []
    if prompt.template == Template.T1:
        separator, parse = TUPLE_SEPARATOR, _parse_plain_fragment
    else:
        separator, parse = MARKER_TUPLE_SEPARATOR, _parse_marker_fragment
    return [parse(fragment, prompt, source) for fragment in raw.split(separator)]


def enforce_semantics(
    candidate: ParsedCandidate,
    sentence_text: str,
    category_vocab: set[str] | None = None,
    *,
    substring_filter: bool = True,
) -> ParsedCandidate:
    """Apply the first-step token-type constraints to a parsed tuple, per role.

    Failures flip `valid` to False with a reason; already-invalid candidates
    pass through unchanged.
    """
    if not candidate.valid or candidate.tuple is None:
        return candidate
    t = candidate.tuple
    if t.sentiment not in SENTIMENT_LABELS:
        return replace(candidate, valid=False, reason=f"sentiment {t.sentiment!r} outside closed set")
    if t.category is not None:
        if category_vocab is None:
            raise MissingVocabulary("semantic check on a category needs a category vocabulary")
        if t.category not in category_vocab:
            return replace(candidate, valid=False, reason=f"category {t.category!r} not in vocabulary")
    if substring_filter:
        text = normalize_text(sentence_text)
        for kind in (ElementKind.ASPECT, ElementKind.OPINION):
            value = t.value(kind)
            if value is not None and value != IMPLICIT_VALUE and value not in text:
                return replace(candidate, valid=False, reason=f"{kind.value} {value!r} not in sentence")
    return candidate


def write_reject_dump(candidates: list[ParsedCandidate], path: str | Path) -> None:
    """Debug dump of rejected candidates with reasons, one JSON object per line."""
    rows = []
    for candidate in candidates:
        if candidate.valid:
            continue
        row: dict = {"reason": candidate.reason}
        if candidate.source is not None:
            row["sentence_id"] = candidate.source.sentence_id
            row["input"] = candidate.source.input_text
        rows.append(row)
    write_jsonl(rows, path)
