"""Dataset I/O: canonical line-delimited JSON plus legacy ABSA file adapters.

Canonical format: UTF-8, one JSON object per line, LF terminators. Each object
has `id`, `text`, and `tuples`; tuple objects carry only the roles the task
defines (absent roles are omitted, never null).
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    SENTIMENT_LABELS,
    IMPLICIT_VALUE,
    AnnotatedSentence,
    ElementKind,
    SentimentTuple,
    Task,
    check_tuple,
    normalize_text,
)
from .errors import DuplicateId, ParseError, TaskMismatch, UnknownSentimentLabel

_TUPLE_KEYS = ("aspect", "category", "opinion", "sentiment")

DEFAULT_SENTIMENT_MAP = {
    "POS": "positive",
    "NEU": "neutral",
    "NEG": "negative",
    "positive": "positive",
    "neutral": "neutral",
    "negative": "negative",
}


@dataclass
class DatasetFile:
    """A parsed dataset: task, ordered records, and provenance."""

    task: Task
    records: list[AnnotatedSentence]
    split: str | None = None
    path: Path | None = None


@dataclass(frozen=True)
class LegacyAdapter:
    """Per-corpus declaration of legacy tuple field order and sentiment map."""

    field_order: tuple[ElementKind, ...]
    sentiment_map: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_SENTIMENT_MAP))


def default_adapter(task: Task) -> LegacyAdapter:
    """Adapter matching the published split conventions for each task."""
    return LegacyAdapter(field_order=task.roles)


def _finish_value(raw: str, kind: ElementKind, *, implicit_opinion_as_it: bool) -> str:
    value = normalize_text(raw)
    if kind is ElementKind.ASPECT and value == "null":
        return IMPLICIT_VALUE
    if kind is ElementKind.OPINION and implicit_opinion_as_it and value == "null":
        return IMPLICIT_VALUE
    return value


def _build_tuple(
    values: dict[ElementKind, str],
    task: Task,
    *,
    implicit_opinion_as_it: bool,
    path: Path,
    line: int,
) -> SentimentTuple:
    fields: dict[str, str] = {}
    for kind, raw in values.items():
        fields[kind.value] = _finish_value(raw, kind, implicit_opinion_as_it=implicit_opinion_as_it)
    sentiment = fields.get("sentiment", "")
    if sentiment not in SENTIMENT_LABELS:
        raise ParseError(f"sentiment {sentiment!r} is not one of {SENTIMENT_LABELS}", path=path, line=line)
    t = SentimentTuple(
        aspect=fields.get("aspect", ""),
        sentiment=sentiment,
        category=fields.get("category"),
        opinion=fields.get("opinion"),
    )
    check_tuple(t, task)
    return t


def load_canonical(
    path: str | Path,
    task: Task,
    *,
    split: str | None = None,
    implicit_opinion_as_it: bool = True,
) -> DatasetFile:
    """Read a canonical dataset file, validating every tuple against the task.

    Values are normalized; "NULL" aspects (and opinions, when the flag is on)
    become "it"; tuple order is preserved exactly as stored.
    """
    path = Path(path)
    records: list[AnnotatedSentence] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                raise ParseError("blank line", path=path, line=lineno)
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path=path, line=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("record is not a JSON object", path=path, line=lineno)
            rid = obj.get("id")
            text = obj.get("text")
            if not isinstance(rid, str) or not rid:
                raise ParseError("missing or empty id", path=path, line=lineno)
            if not isinstance(text, str) or not text.strip():
                raise ParseError("missing or empty text", path=path, line=lineno)
            if rid in seen_ids:
                raise DuplicateId(f"{path}:{lineno}: duplicate id {rid!r}")
            seen_ids.add(rid)
            raw_tuples = obj.get("tuples", [])
            if not isinstance(raw_tuples, list):
                raise ParseError("tuples is not a list", path=path, line=lineno)
            tuples = []
            for raw in raw_tuples:
                if not isinstance(raw, dict):
                    raise ParseError("tuple entry is not an object", path=path, line=lineno)
                values = {}
                for key in _TUPLE_KEYS:
                    if key in raw and raw[key] is not None:
                        if not isinstance(raw[key], str):
                            raise ParseError(f"tuple field {key!r} is not a string", path=path, line=lineno)
                        values[ElementKind(key)] = raw[key]
                try:
                    tuples.append(
                        _build_tuple(
                            values, task, implicit_opinion_as_it=implicit_opinion_as_it, path=path, line=lineno
                        )
                    )
                except TaskMismatch as exc:
                    raise TaskMismatch(f"{path}:{lineno}: {exc}") from exc
            records.append(AnnotatedSentence(id=rid, text=text, tuples=tuple(tuples)))
    return DatasetFile(task=task, records=records, split=split, path=path)


def convert_legacy(
    path: str | Path,
    task: Task,
    *,
    adapter: LegacyAdapter | None = None,
    split: str | None = None,
    implicit_opinion_as_it: bool = True,
) -> DatasetFile:
    """Adapt a legacy "sentence####[tuple literal]" file into canonical records.

    The adapter declares the source tuple field order and the sentiment
    abbreviation map (POS/NEU/NEG by default).
    """
    path = Path(path)
    adapter = adapter or default_adapter(task)
    if len(adapter.field_order) != task.arity:
        raise TaskMismatch(
            f"adapter declares {len(adapter.field_order)} fields, task {task.value} has arity {task.arity}"
        )
    records: list[AnnotatedSentence] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                raise ParseError("blank line", path=path, line=lineno)
            if "####" not in line:
                raise ParseError("missing #### separator", path=path, line=lineno)
            sentence, _, literal = line.partition("####")
            if not sentence.strip():
                raise ParseError("empty sentence", path=path, line=lineno)
            try:
                parsed = ast.literal_eval(literal.strip())
            except (ValueError, SyntaxError) as exc:
                raise ParseError(f"bad tuple literal: {exc}", path=path, line=lineno) from exc
            if not isinstance(parsed, list):
                raise ParseError("tuple literal is not a list", path=path, line=lineno)
            tuples = []
            for item in parsed:
                if not isinstance(item, (tuple, list)):
                    raise ParseError("tuple entry is not a tuple", path=path, line=lineno)
                if len(item) != task.arity:
                    raise ParseError(
                        f"tuple has {len(item)} fields, task {task.value} has arity {task.arity}",
                        path=path,
                        line=lineno,
                    )
                if not all(isinstance(v, str) for v in item):
                    raise ParseError("tuple fields must be strings", path=path, line=lineno)
                values: dict[ElementKind, str] = {}
                for kind, raw in zip(adapter.field_order, item):
                    if kind is ElementKind.SENTIMENT:
                        label = adapter.sentiment_map.get(raw.strip())
                        if label is None:
                            label = adapter.sentiment_map.get(normalize_text(raw))
                        if label is None:
                            raise UnknownSentimentLabel(f"{path}:{lineno}: unknown sentiment label {raw!r}")
                        values[kind] = label
                    else:
                        values[kind] = raw
                tuples.append(
                    _build_tuple(
                        values, task, implicit_opinion_as_it=implicit_opinion_as_it, path=path, line=lineno
                    )
                )
            records.append(AnnotatedSentence(id=f"{path.stem}-{lineno}", text=sentence.strip(), tuples=tuple(tuples)))
    return DatasetFile(task=task, records=records, split=split, path=path)


def record_to_dict(record: AnnotatedSentence) -> dict:
    """Canonical JSON shape for one record (fixed key order, roles omitted when absent)."""
    tuples = []
    for t in record.tuples:
        obj: dict[str, str] = {"aspect": t.aspect}
        if t.category is not None:
            obj["category"] = t.category
        if t.opinion is not None:
            obj["opinion"] = t.opinion
        obj["sentiment"] = t.sentiment
        tuples.append(obj)
    return {"id": record.id, "text": record.text, "tuples": tuples}


def write_canonical(dataset: DatasetFile, path: str | Path) -> None:
    """Write records in order as canonical JSONL; byte-deterministic."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in dataset.records:
            f.write(json.dumps(record_to_dict(record), ensure_ascii=False))
            f.write("\n")


def write_jsonl(rows: list[dict], path: str | Path) -> None:
    """Write pre-shaped dicts as one JSON object per line; byte-deterministic."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False))
            f.write("\n")


def read_jsonl(path: str | Path) -> list[dict]:
    """Read a line-delimited JSON file into dicts, with line-numbered errors."""
    path = Path(path)
    rows: list[dict] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                raise ParseError("blank line", path=path, line=lineno)
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path=path, line=lineno) from exc
    return rows
