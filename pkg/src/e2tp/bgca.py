"""Cross-domain augmentation: bidirectional text↔label datasets and mixing.

Label strings serialize triplets as "⟨pos⟩ <aspect> ⟨opinion⟩ <opinion>"
segments joined by spaces, with ⟨pos⟩/⟨neg⟩/⟨neu⟩ naming the polarity. A
text-to-label model trained on the source domain pseudo-labels unlabeled
target-domain text; a label-to-text model trained on the swapped pairs turns
those noisy labels back into synthetic sentences, which are mixed into the
source dataset.
"""

from __future__ import annotations

import re

from .backends import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_MAX_NEW_TOKENS,
    Backend,
    generate_all,
)
from .core import AnnotatedSentence, SentimentTuple, Task, normalize_text
from .errors import TaskMismatch
from .ingest import DatasetFile

POLARITY_MARKERS = {
    "positive": "⟨pos⟩",
    "negative": "⟨neg⟩",
    "neutral": "⟨neu⟩",
}
OPINION_MARKER = "⟨opinion⟩"

_MARKER_TO_POLARITY = {marker: label for label, marker in POLARITY_MARKERS.items()}
_ANY_MARKER = re.compile(r"⟨pos⟩|⟨neg⟩|⟨neu⟩|⟨opinion⟩")


def _require_aste(dataset: DatasetFile) -> None:
    if dataset.task is not Task.ASTE:
        raise TaskMismatch(f"augmentation is defined for {Task.ASTE.value}, got {dataset.task.value}")


def serialize_label_string(tuples: tuple[SentimentTuple, ...] | list[SentimentTuple]) -> str:
    """Render triplets as polarity/opinion marker segments, space-joined."""
    return " ".join(
        f"{POLARITY_MARKERS[t.sentiment]} {t.aspect} {OPINION_MARKER} {t.opinion}" for t in tuples
    )


def build_text_to_label(dataset: DatasetFile) -> list[tuple[str, str]]:
    """(sentence, label string) training pairs; targets keep gold tuple order."""
    _require_aste(dataset)
    return [
        (record.text, serialize_label_string(record.tuples))
        for record in dataset.records
        if record.tuples
    ]


def build_label_to_text(dataset: DatasetFile) -> list[tuple[str, str]]:
    """The text-to-label pairs with input and target swapped."""
    return [(label, text) for text, label in build_text_to_label(dataset)]


def parse_label_string(raw: str) -> list[SentimentTuple]:
    """Greedy left-to-right scan of a label string into triplets.

    Each polarity marker opens a segment; the text up to ⟨opinion⟩ is the
    aspect and the text up to the next polarity marker (or the end) is the
    opinion. Malformed segments are dropped; the parse never raises.
    """
    if not raw or not raw.strip():
        return []
    hits = [(m.start(), m.end(), m.group()) for m in _ANY_MARKER.finditer(raw)]
    tuples: list[SentimentTuple] = []
    i = 0
    while i < len(hits):
        _, open_end, marker = hits[i]
        if marker not in _MARKER_TO_POLARITY:
            i += 1
            continue
        if i + 1 >= len(hits) or hits[i + 1][2] != OPINION_MARKER:
            i += 1
            continue
        aspect = normalize_text(raw[open_end : hits[i + 1][0]])
        opinion_end = hits[i + 2][0] if i + 2 < len(hits) else len(raw)
        if i + 2 < len(hits) and hits[i + 2][2] == OPINION_MARKER:
            # stray opinion marker inside the opinion text: malformed segment
            i += 2
            continue
        opinion = normalize_text(raw[hits[i + 1][1] : opinion_end])
        if aspect and opinion:
            tuples.append(
                SentimentTuple(aspect=aspect, sentiment=_MARKER_TO_POLARITY[marker], opinion=opinion)
            )
        i += 2
    return tuples


def augment_cross_domain(
    source: DatasetFile,
    target_texts: list[str],
    t2l_backend: Backend,
    l2t_backend: Backend,
    *,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int = 1,
    id_prefix: str = "aug",
) -> DatasetFile:
    """Mix source records with pseudo-labeled synthetic target-domain records.

    Target texts are pseudo-labeled by the text-to-label backend; labels with
    a non-empty parse are fed to the label-to-text backend, and each (synthetic
    sentence, parsed pseudo-label) pair becomes a new record. Source records
    are never mutated; synthetic ids are namespaced away from source ids.
    """
    _require_aste(source)
    if not target_texts:
        return DatasetFile(task=source.task, records=list(source.records), split=source.split)
    pseudo_labels = generate_all(
        t2l_backend, list(target_texts), max_new_tokens=max_new_tokens, batch_size=batch_size, workers=workers
    )
    parses = [parse_label_string(label) for label in pseudo_labels]
    usable = [(label, parsed) for label, parsed in zip(pseudo_labels, parses) if parsed]
    synthetic: list[AnnotatedSentence] = []
    if usable:
        sentences = generate_all(
            l2t_backend,
            [label for label, _ in usable],
            max_new_tokens=max_new_tokens,
            batch_size=batch_size,
            workers=workers,
        )
        taken_ids = {record.id for record in source.records}
        for i, (sentence, (_, parsed)) in enumerate(zip(sentences, usable)):
            if not sentence.strip():
                continue
            new_id = f"{id_prefix}-{i:04d}"
            while new_id in taken_ids:
                new_id = f"{new_id}x"
            taken_ids.add(new_id)
            synthetic.append(AnnotatedSentence(id=new_id, text=sentence.strip(), tuples=tuple(parsed)))
    return DatasetFile(task=source.task, records=list(source.records) + synthetic, split=source.split)
