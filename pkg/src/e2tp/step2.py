"""Second-step dataset construction: anchored prompts, permutations, selection.

A second-step input anchors one predicted element ahead of a task prompt that
lists the remaining roles. Two templates exist: the plain template joins role
names with ", " and switches its arrow on anchor multiplicity; the marker
template uses "[A] [C] [O] [S]" role markers and always the "⇒" arrow.
Permutations keep the anchor kind first; diet selection draws one seeded
permutation per anchor kind, full selection keeps all (arity−1)! of them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path

from .core import AnnotatedSentence, Element, ElementKind, SentimentTuple, Task, element_set
from .errors import EmptyTargetSet, TaskMismatch, TemplateMismatch
from .ingest import DatasetFile, write_jsonl

ARROW_SINGLE = "→"
ARROW_MULTI = "⇒"
TUPLE_SEPARATOR = " | "
MARKER_TUPLE_SEPARATOR = " [SSEP] "


class Template:
    """The two prompting templates."""

    T1 = "T1"
    T2 = "T2"


class Paradigm:
    """Training/inference paradigms: data-efficient diet, full-selection f1/f2."""

    DIET = "diet"
    F1 = "f1"
    F2 = "f2"

    ALL = (DIET, F1, F2)

    @staticmethod
    def template(paradigm: str) -> str:
        if paradigm in (Paradigm.DIET, Paradigm.F1):
            return Template.T1
        if paradigm == Paradigm.F2:
            return Template.T2
        raise ValueError(f"unknown paradigm {paradigm!r}")


@dataclass(frozen=True)
class TaskPrompt:
    """A role order with the anchor kind in position 0, plus a template."""

    order: tuple[ElementKind, ...]
    template: str

    def __post_init__(self) -> None:
        if len(set(self.order)) != len(self.order):
            raise ValueError(f"prompt order repeats a kind: {self.order}")
        if self.template not in (Template.T1, Template.T2):
            raise ValueError(f"unknown template {self.template!r}")


@dataclass(frozen=True)
class Step2Record:
    """One rendered second-step data point; target is absent in inference mode."""

    sentence_id: str
    anchor: Element
    prompt: TaskPrompt
    arrow: str
    input_text: str
    target_text: str | None
    paradigm: str


def enumerate_prompts(task: Task, anchor_kind: ElementKind) -> list[tuple[ElementKind, ...]]:
    """All role orders with the anchor kind fixed first, deterministically.

    The remaining kinds are permuted in lexicographic order of their names,
    yielding (arity−1)! orders.
    """
    if anchor_kind not in task.roles:
        raise TaskMismatch(f"{anchor_kind.value} is not a role of task {task.value}")
    rest = sorted((k for k in task.roles if k is not anchor_kind), key=lambda k: k.value)
    return [(anchor_kind, *tail) for tail in permutations(rest)]


def diet_order_index(seed: int, kind: ElementKind, n_orders: int) -> int:
    """Stateless seeded draw, keyed by (seed, kind) only.

    All records sharing an anchor kind use the same order, and the same
    (seed, kind) pair yields the same order at train and inference time,
    on any machine.
    """
    digest = hashlib.sha256(f"{seed}:{kind.value}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % n_orders


def arrow_for(anchor: Element, paradigm: str) -> str:
    """"→" only under f1 with a unique anchor; "⇒" everywhere else."""
    if paradigm == Paradigm.F1 and anchor.multiplicity == 1:
        return ARROW_SINGLE
    return ARROW_MULTI


def render_input(sentence_text: str, anchor: Element, prompt: TaskPrompt, paradigm: str) -> str:
    """Render a second-step input for the given template and paradigm."""
    if prompt.template != Paradigm.template(paradigm):
        raise TemplateMismatch(f"paradigm {paradigm} renders {Paradigm.template(paradigm)}, got {prompt.template}")
    if prompt.order[0] is not anchor.kind:
        raise ValueError(f"anchor kind {anchor.kind.value} must lead the prompt order")
    if prompt.template == Template.T1:
        task_prompt = ", ".join(k.value for k in prompt.order)
        return f"{sentence_text} {arrow_for(anchor, paradigm)} {anchor.value}: {task_prompt}"
    task_prompt = " ".join(k.marker for k in prompt.order)
    return f"{sentence_text} {ARROW_MULTI} {anchor.value}: {task_prompt}"


def render_target(tuples_for_anchor: list[SentimentTuple], prompt: TaskPrompt) -> str:
    """Serialize the anchor's tuples, element values in prompt order.

    Plain template: values joined ", ", tuples joined " | ". Marker template:
    each value prefixed by its role marker, tuples joined " [SSEP] ".
    """
    if not tuples_for_anchor:
        raise EmptyTargetSet("an anchored target needs at least one tuple")
    if prompt.template == Template.T1:
        return TUPLE_SEPARATOR.join(
            ", ".join(t.value(k) for k in prompt.order) for t in tuples_for_anchor  # type: ignore[misc]
        )
    return MARKER_TUPLE_SEPARATOR.join(
        " ".join(f"{k.marker} {t.value(k)}" for k in prompt.order) for t in tuples_for_anchor
    )


def prompts_for_anchor(task: Task, anchor_kind: ElementKind, paradigm: str, seed: int | None) -> list[TaskPrompt]:
    """The prompt orders a paradigm uses for one anchor kind.

    Full selection (f1/f2) keeps every enumerated order; diet keeps the single
    seeded draw for the kind. Diet requires a seed.
    """
    template = Paradigm.template(paradigm)
    orders = enumerate_prompts(task, anchor_kind)
    if paradigm == Paradigm.DIET:
        if seed is None:
            raise ValueError("diet selection requires a seed")
        orders = [orders[diet_order_index(seed, anchor_kind, len(orders))]]
    return [TaskPrompt(order, template) for order in orders]


def build_step2(dataset: DatasetFile, paradigm: str, seed: int | None = None) -> list[Step2Record]:
    """Construct the second-step training records for every sentence and anchor."""
    if paradigm not in Paradigm.ALL:
        raise ValueError(f"unknown paradigm {paradigm!r}")
    records: list[Step2Record] = []
    for sentence in dataset.records:
        records.extend(_sentence_records(sentence, dataset.task, paradigm, seed))
    return records


def _sentence_records(
    sentence: AnnotatedSentence, task: Task, paradigm: str, seed: int | None
) -> list[Step2Record]:
    records = []
    for anchor in element_set(sentence, task):
        matching = [t for t in sentence.tuples if t.value(anchor.kind) == anchor.value]
        for prompt in prompts_for_anchor(task, anchor.kind, paradigm, seed):
            records.append(
                Step2Record(
                    sentence_id=sentence.id,
                    anchor=anchor,
                    prompt=prompt,
                    arrow=arrow_for(anchor, paradigm),
                    input_text=render_input(sentence.text, anchor, prompt, paradigm),
                    target_text=render_target(matching, prompt),
                    paradigm=paradigm,
                )
            )
    return records


def step2_record_to_dict(record: Step2Record) -> dict:
    row = {
        "sentence_id": record.sentence_id,
        "anchor_value": record.anchor.value,
        "anchor_kind": record.anchor.kind.value,
        "order": [k.value for k in record.prompt.order],
        "template": record.prompt.template,
        "arrow": record.arrow,
        "input": record.input_text,
    }
    if record.target_text is not None:
        row["target"] = record.target_text
    return row


def write_step2(records: list[Step2Record], path: str | Path) -> None:
    """Write step-2 records as JSONL; byte-deterministic for a fixed seed."""
    write_jsonl([step2_record_to_dict(r) for r in records], path)
