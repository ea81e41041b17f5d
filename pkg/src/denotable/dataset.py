"""Examples on disk: JSONL datasets, run configuration, seed streams.

A dataset is one JSON object per line with fields id, question, table
(a path relative to the dataset file), and answer (non-empty list of
strings).  All randomness in a run flows from RunConfig.seed through
named streams, so parallel stages cannot perturb each other.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Sequence

from .chart import DEFAULT_CAP
from .tables import Table, parse_table


@dataclass(frozen=True)
class Example:
    """One annotated question over one table file."""

    id: str
    question: str
    table: str
    answer: tuple[str, ...]

    def __post_init__(self):
        if not self.id:
            raise ValueError("example id must be non-empty")
        if not self.answer:
            raise ValueError(f"example {self.id!r} has an empty answer")


@dataclass(frozen=True)
class RunConfig:
    """Knobs shared by every pipeline stage."""

    s_max: int = 7
    beam: int | None = None
    k: int = 30
    l: int = 5
    tolerance: int = 0
    seed: int = 0
    rules: str | None = None
    jobs: int = 1
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        for name in ("s_max", "k", "l", "jobs", "cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.beam is not None and self.beam < 1:
            raise ValueError("beam must be positive or unlimited")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def override(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def stream_seed(seed: int, name: str) -> int:
    """Independent 64-bit seed for the named randomness stream."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def example_to_json(ex: Example) -> dict:
    return {
        "id": ex.id,
        "question": ex.question,
        "table": ex.table,
        "answer": list(ex.answer),
    }


def example_from_json(data: dict) -> Example:
    try:
        return Example(
            id=data["id"],
            question=data["question"],
            table=data["table"],
            answer=tuple(data["answer"]),
        )
    except KeyError as e:
        raise ValueError(f"example missing field {e.args[0]!r}") from None


def load_examples(path) -> list[Example]:
    """All examples from a JSONL file; blank lines are skipped."""
    examples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}:{lineno}: invalid JSON: {e.msg}") from None
        try:
            examples.append(example_from_json(data))
        except ValueError as e:
            raise ValueError(f"{path}:{lineno}: {e}") from None
    return examples


def write_examples(path, examples: Sequence[Example]) -> None:
    text = "".join(json.dumps(example_to_json(ex), sort_keys=True) + "\n" for ex in examples)
    atomic_write_text(path, text)


def example_table(ex: Example, base_dir) -> Table:
    """The example's table, resolved relative to the dataset directory."""
    path = Path(base_dir) / ex.table
    format = "tsv" if path.suffix.lower() == ".tsv" else "csv"
    return parse_table(path.read_text(encoding="utf-8"), format=format, table_id=ex.id)


def convert_wtq(examples_tsv, table_root: str = ".") -> list[Example]:
    """Best-effort converter for the WikiTableQuestions examples layout.

    Expects lines of `id<TAB>utterance<TAB>context<TAB>targetValue`
    with an optional header row; multiple answers are |-separated.
    Table refs are kept as given, joined under `table_root`; cells
    containing tabs or exotic escapes may not survive round-tripping.
    """
    rows = csv.reader(
        Path(examples_tsv).read_text(encoding="utf-8").splitlines(),
        delimiter="\t",
        quoting=csv.QUOTE_NONE,
    )
    examples = []
    for row in rows:
        if not row or row[0] == "id":
            continue
        if len(row) != 4:
            raise ValueError(f"expected 4 tab-separated fields, got {len(row)}")
        ex_id, question, context, target = row
        answers = tuple(a for a in target.split("|") if a != "")
        examples.append(
            Example(
                id=ex_id,
                question=question,
                table=str(Path(table_root) / context),
                answer=answers,
            )
        )
    return examples


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file and rename, so readers never see partials."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
