"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class E2tpError(Exception):
    """Base class for every toolkit error."""


class TaskMismatch(E2tpError):
    """A tuple, element kind, or prompt does not fit the task's role set."""


class ParseError(E2tpError):
    """A dataset line could not be parsed."""

    def __init__(self, message: str, *, path: object = None, line: int | None = None) -> None:
        self.path = path
        self.line = line
        where = str(path) if path is not None else ""
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class DuplicateId(E2tpError):
    """Two records in one dataset file share an id."""


class UnknownSentimentLabel(E2tpError):
    """A legacy sentiment abbreviation has no mapping to the closed label set."""


class MissingVocabulary(E2tpError):
    """Category values cannot be constrained without a category vocabulary."""


class TemplateMismatch(E2tpError):
    """A prompt's template disagrees with the paradigm it is rendered for."""


class EmptyTargetSet(E2tpError):
    """A training target was requested for an anchor with no matching tuples."""


class ReplayMiss(E2tpError):
    """An input is absent from a replay backend's recorded map."""

    def __init__(self, input_text: str) -> None:
        self.input_text = input_text
        super().__init__(f"no recorded output for input: {input_text!r}")


class RemoteUnavailable(E2tpError):
    """The remote generation service failed past the retry budget."""


class Timeout(E2tpError):
    """The remote generation service timed out past the retry budget."""


class UnknownSentence(E2tpError):
    """An oracle query names a sentence that is not in the gold dataset."""


class UnparseableInput(E2tpError):
    """An oracle query is neither a first-step nor a second-step input."""


class UnknownSentenceId(E2tpError):
    """A prediction references a sentence id absent from the gold dataset."""


class MissingTrace(E2tpError):
    """Propagated-error analysis requires a trace with per-tuple supporters."""


class ConfigError(E2tpError):
    """One or more configuration fields are invalid; lists every violation."""

    def __init__(self, problems: list[str]) -> None:
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))
