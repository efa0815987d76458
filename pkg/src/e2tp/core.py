"""Core domain model: tasks, element kinds, sentiment tuples, canonical forms.

Everything downstream (dataset builders, parsers, voting, evaluation) relies on
the normalization and canonical-key rules defined here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import TaskMismatch

SENTIMENT_LABELS = ("positive", "neutral", "negative")

# Implicit aspect/opinion placeholder: "NULL" annotations become this value.
IMPLICIT_VALUE = "it"


class ElementKind(str, Enum):
    """One of the four sentiment-element roles."""

    ASPECT = "aspect"
    CATEGORY = "category"
    OPINION = "opinion"
    SENTIMENT = "sentiment"

    @property
    def plural(self) -> str:
        """Query name used in first-step inputs ("what aspects?")."""
        return _PLURALS[self]

    @property
    def marker(self) -> str:
        """Marker token used by the marker template ("[A]" ...)."""
        return _MARKERS[self]


_PLURALS = {
    ElementKind.ASPECT: "aspects",
    ElementKind.CATEGORY: "categories",
    ElementKind.OPINION: "opinions",
    ElementKind.SENTIMENT: "sentiments",
}

_MARKERS = {
    ElementKind.ASPECT: "[A]",
    ElementKind.CATEGORY: "[C]",
    ElementKind.OPINION: "[O]",
    ElementKind.SENTIMENT: "[S]",
}

# Fixed role order used for canonical keys and element grouping.
ROLE_ORDER = (
    ElementKind.ASPECT,
    ElementKind.CATEGORY,
    ElementKind.OPINION,
    ElementKind.SENTIMENT,
)

_KEY_PREFIXES = {
    ElementKind.ASPECT: "a",
    ElementKind.CATEGORY: "c",
    ElementKind.OPINION: "o",
    ElementKind.SENTIMENT: "s",
}


class Task(str, Enum):
    """Tuple-extraction task, each with a fixed role set."""

    ASTE = "aste"
    TASD = "tasd"
    ASQP = "asqp"
    ACOS = "acos"

    @property
    def roles(self) -> tuple[ElementKind, ...]:
        """Role set in canonical order."""
        return _TASK_ROLES[self]

    @property
    def arity(self) -> int:
        return len(_TASK_ROLES[self])


_TASK_ROLES = {
    Task.ASTE: (ElementKind.ASPECT, ElementKind.OPINION, ElementKind.SENTIMENT),
    Task.TASD: (ElementKind.ASPECT, ElementKind.CATEGORY, ElementKind.SENTIMENT),
    Task.ASQP: ROLE_ORDER,
    Task.ACOS: ROLE_ORDER,
}


@dataclass(frozen=True)
class SentimentTuple:
    """One (aspect, category, opinion, sentiment) annotation.

    Values are normalized text; `category` and `opinion` are None for tasks
    whose role set does not include them.
    """

    aspect: str
    sentiment: str
    category: str | None = None
    opinion: str | None = None

    def value(self, kind: ElementKind) -> str | None:
        if kind is ElementKind.ASPECT:
            return self.aspect
        if kind is ElementKind.CATEGORY:
            return self.category
        if kind is ElementKind.OPINION:
            return self.opinion
        return self.sentiment

    @property
    def roles_present(self) -> tuple[ElementKind, ...]:
        return tuple(k for k in ROLE_ORDER if self.value(k) is not None)


@dataclass(frozen=True)
class AnnotatedSentence:
    """A review sentence plus its ordered gold tuples (empty when unlabeled)."""

    id: str
    text: str
    tuples: tuple[SentimentTuple, ...] = ()


@dataclass(frozen=True)
class Element:
    """A (value, kind) pair with the number of tuples it occurs in."""

    value: str
    kind: ElementKind
    multiplicity: int = 1


def normalize_text(raw: str) -> str:
    """Trim, collapse whitespace runs to single spaces, and lowercase.

    Idempotent; empty input yields empty output.
    """
    return " ".join(raw.split()).lower()


def check_tuple(t: SentimentTuple, task: Task) -> None:
    """Raise TaskMismatch unless the roles present exactly match the task's."""
    if t.roles_present != task.roles:
        present = ", ".join(k.value for k in t.roles_present) or "none"
        expected = ", ".join(k.value for k in task.roles)
        raise TaskMismatch(f"tuple has roles [{present}], task {task.value} needs [{expected}]")


def elements_from_values(values_by_kind: dict[ElementKind, list[str]]) -> list[Element]:
    """Deduplicate per-role value lists into elements with multiplicities.

    Role-major ordering: all values of the first role (in first-occurrence
    order), then the next role, and so on. Multiplicity is the occurrence
    count of the value within its role's list.
    """
    elements: list[Element] = []
    for kind, values in values_by_kind.items():
        counts: dict[str, int] = {}
        order: list[str] = []
        for value in values:
            if value not in counts:
                counts[value] = 0
                order.append(value)
            counts[value] += 1
        elements.extend(Element(value, kind, counts[value]) for value in order)
    return elements


def element_set(sentence: AnnotatedSentence, task: Task) -> list[Element]:
    """Unique (value, kind) pairs over the task's roles, with multiplicities.

    Ordering groups by role (aspect, then category, opinion, sentiment) and by
    first occurrence in tuple order within a role.
    """
    for t in sentence.tuples:
        check_tuple(t, task)
    values_by_kind: dict[ElementKind, list[str]] = {
        kind: [t.value(kind) for t in sentence.tuples]  # type: ignore[misc]
        for kind in task.roles
    }
    return elements_from_values(values_by_kind)


def canonical_tuple_key(t: SentimentTuple, task: Task) -> str:
    """Order-independent identity key: "a=…|c=…|o=…|s=…", absent roles skipped.

    Two tuples of the same task are equal iff their keys are byte-equal.
    Injective as long as values are free of the "|" separator, which
    review-domain values are.
    """
    check_tuple(t, task)
    parts = []
    for kind in task.roles:
        value = t.value(kind)
        parts.append(f"{_KEY_PREFIXES[kind]}={normalize_text(value)}")  # type: ignore[arg-type]
    return "|".join(parts)
