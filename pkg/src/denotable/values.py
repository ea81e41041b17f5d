"""Value algebra shared by tables, worlds, and denotations.

Four kinds of values exist: table rows, entities (normalized cell
strings), numbers, and possibly-partial dates.  Every value has a
canonical text rendering that is injective across kinds, which the rest
of the package relies on for hashing and for stable serialization.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass
from datetime import date as _pydate

_WS_RE = re.compile(r"\s+")
_STRIP_CHARS = string.punctuation + string.whitespace


def normalize_entity(text: str) -> str:
    """Lowercase, collapse runs of whitespace, strip surrounding punctuation."""
    text = _WS_RE.sub(" ", text.lower())
    return text.strip(_STRIP_CHARS)


def format_number(x: float) -> str:
    """Shortest decimal that round-trips: integers lose the trailing '.0'."""
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


@dataclass(frozen=True, order=True)
class Row:
    index: int

    def render(self) -> str:
        return f"r{self.index}"


@dataclass(frozen=True, order=True)
class Entity:
    text: str

    def render(self) -> str:
        return json.dumps(self.text, ensure_ascii=False)


@dataclass(frozen=True, order=True)
class Number:
    value: float

    def render(self) -> str:
        return format_number(self.value)


@dataclass(frozen=True)
class Date:
    """Partial date; unknown components are None but at least one is known."""

    year: int | None
    month: int | None
    day: int | None

    def __post_init__(self) -> None:
        if self.year is None and self.month is None and self.day is None:
            raise ValueError("date needs at least one known component")

    def render(self) -> str:
        y = "XX" if self.year is None else f"{self.year:04d}"
        m = "XX" if self.month is None else f"{self.month:02d}"
        d = "XX" if self.day is None else f"{self.day:02d}"
        return f"{y}-{m}-{d}"

    def components(self) -> tuple[int | None, int | None, int | None]:
        return (self.year, self.month, self.day)

    def is_full(self) -> bool:
        return self.year is not None and self.month is not None and self.day is not None

    def to_pydate(self) -> _pydate:
        if not self.is_full():
            raise ValueError(f"partial date {self.render()} has no calendar day")
        return _pydate(self.year, self.month, self.day)


Value = Row | Entity | Number | Date

_KIND_RANK = {Row: 0, Entity: 1, Number: 2, Date: 3}


def value_sort_key(v: Value) -> tuple:
    """Total order on values: by kind, then payload (None components first)."""
    if isinstance(v, Row):
        return (0, v.index)
    if isinstance(v, Entity):
        return (1, v.text)
    if isinstance(v, Number):
        return (2, v.value)
    return (3,) + tuple((c is not None, c if c is not None else 0) for c in v.components())


def render_value(v: Value) -> str:
    return v.render()


def compare_dates(a: Date, b: Date) -> int | None:
    """Component-wise comparison; None when an unknown blocks the decision.

    Components are checked year, month, day.  Both unknown at a level
    counts as a tie and the next level decides; exactly one unknown makes
    the pair incomparable.
    """
    for ca, cb in zip(a.components(), b.components()):
        if ca is None and cb is None:
            continue
        if ca is None or cb is None:
            return None
        if ca != cb:
            return -1 if ca < cb else 1
    return 0


def compare_values(a: Value, b: Value) -> int | None:
    """-1/0/1 for comparable pairs, None otherwise.

    Numbers compare only with numbers, dates only with dates.
    """
    if isinstance(a, Number) and isinstance(b, Number):
        if a.value == b.value:
            return 0
        return -1 if a.value < b.value else 1
    if isinstance(a, Date) and isinstance(b, Date):
        return compare_dates(a, b)
    return None


def parse_value(text: str) -> Value:
    """Inverse of render(); accepts r<i>, quoted entities, dates, numbers."""
    if re.fullmatch(r"r\d+", text):
        return Row(int(text[1:]))
    if text.startswith('"'):
        return Entity(json.loads(text))
    m = re.fullmatch(r"(XX|\d{4})-(XX|\d{2})-(XX|\d{2})", text)
    if m:
        y, mo, d = (None if g == "XX" else int(g) for g in m.groups())
        return Date(y, mo, d)
    return Number(float(text))
