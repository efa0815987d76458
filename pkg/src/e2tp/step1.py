"""First-step dataset construction: one element-listing query per role.

Each sentence yields arity-many records of the form
"<text> ⇒ what <plural>?" whose training target lists the per-tuple values of
that role, comma-separated, duplicates retained (duplicate counts are the
multiplicity signal consumed at inference).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .core import SENTIMENT_LABELS, IMPLICIT_VALUE, ElementKind, normalize_text
from .errors import MissingVocabulary
from .ingest import DatasetFile, write_jsonl

QUERY_ARROW = "⇒"


@dataclass(frozen=True)
class Step1Record:
    """One element-listing query; target is absent in inference mode."""

    sentence_id: str
    kind: ElementKind
    input_text: str
    target_text: str | None = None


def step1_input(text: str, kind: ElementKind) -> str:
    return f"{text} {QUERY_ARROW} what {kind.plural}?"


def build_step1(dataset: DatasetFile) -> list[Step1Record]:
    """Emit arity records per sentence; targets are omitted for unlabeled records."""
    records: list[Step1Record] = []
    for sentence in dataset.records:
        for kind in dataset.task.roles:
            target = None
            if sentence.tuples:
                target = ", ".join(t.value(kind) for t in sentence.tuples)  # type: ignore[misc]
            records.append(
                Step1Record(
                    sentence_id=sentence.id,
                    kind=kind,
                    input_text=step1_input(sentence.text, kind),
                    target_text=target,
                )
            )
    return records


def parse_step1_output(raw: str, kind: ElementKind) -> list[str]:
    """Split a generated value list on ", ", normalizing each value.

    Duplicates and order are retained; values that normalize to nothing are
    dropped. Never raises: arbitrary output degrades to fewer values.
    """
    del kind  # uniform across roles; kept for call-site symmetry with constrain_elements
    if not raw or not raw.strip():
        return []
    values = [normalize_text(part) for part in raw.split(", ")]
    return [v for v in values if v]


def constrain_elements(
    values: list[str],
    kind: ElementKind,
    sentence_text: str,
    category_vocab: set[str] | None = None,
    *,
    substring_filter: bool = True,
) -> list[str]:
    """Drop values of the wrong token type; order preserved among survivors.

    Sentiments must be one of the three closed labels; categories must be in
    the supplied vocabulary; aspects and opinions must equal "it" or occur as
    a contiguous substring of the normalized sentence (policy-toggleable).
    """
    if kind is ElementKind.SENTIMENT:
        return [v for v in values if v in SENTIMENT_LABELS]
    if kind is ElementKind.CATEGORY:
        if category_vocab is None:
            raise MissingVocabulary("category constraint needs a category vocabulary")
        return [v for v in values if v in category_vocab]
    if not substring_filter:
        return list(values)
    text = normalize_text(sentence_text)
    return [v for v in values if v == IMPLICIT_VALUE or v in text]


def step1_record_to_dict(record: Step1Record) -> dict:
    row = {"sentence_id": record.sentence_id, "kind": record.kind.value, "input": record.input_text}
    if record.target_text is not None:
        row["target"] = record.target_text
    return row


def write_step1(records: list[Step1Record], path: str | Path) -> None:
    """Write step-1 records as JSONL (fields: sentence_id, kind, input, target)."""
    write_jsonl([step1_record_to_dict(r) for r in records], path)
