"""Training-file loading: line-delimited JSON with `input` and `target` fields.

Step-1, step-2, and bidirectional augmentation files all share this envelope;
extra fields are ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class TrainingPair:
    input_text: str
    target_text: str


def load_pairs(path: str | Path) -> list[TrainingPair]:
    """Read every record, rejecting the whole file on any malformed row."""
    path = Path(path)
    pairs: list[TrainingPair] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                raise ValueError(f"{path}:{lineno}: blank line")
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(row, dict) or not isinstance(row.get("input"), str):
                raise ValueError(f"{path}:{lineno}: record needs a string `input` field")
            if not isinstance(row.get("target"), str):
                raise ValueError(f"{path}:{lineno}: record needs a string `target` field")
            pairs.append(TrainingPair(input_text=row["input"], target_text=row["target"]))
    if not pairs:
        raise ValueError(f"{path}: no training records")
    return pairs
