"""Turning answer strings into a matchable target denotation.

Both sides of a match are reduced to the same string keys: an answer
string and an entity value go through identical normalization, numbers
use their canonical numeric rendering (so "1,000" matches 1000.0), and
dates use their placeholder rendering.  A denotation matches when the
key multiset of its values equals the key multiset of the answers.
Rows never match a string answer.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .denotations import Denotation, SetD
from .tables import normalize_cell
from .values import Date, Entity, Number, Row, Value, format_number, normalize_entity, render_value


def string_match_key(text: str) -> str:
    """Canonical key for one answer or entity string."""
    stripped = text.strip()
    try:
        number = float(stripped.replace(",", ""))
    except ValueError:
        number = None
    if number is not None:
        return format_number(number)
    interp = normalize_cell(stripped)
    if interp.date is not None:
        return render_value(interp.date).lower()
    return normalize_entity(stripped)


def value_match_key(value: Value) -> str:
    if isinstance(value, Row):
        return f"\x00row:{value.index}"
    if isinstance(value, Entity):
        return string_match_key(value.text)
    if isinstance(value, Number):
        return format_number(value.value)
    if isinstance(value, Date):
        return render_value(value).lower()
    raise TypeError(f"not a value: {value!r}")


@dataclass(frozen=True)
class TargetDenotation:
    """Parsed answer: the raw strings plus their key multiset."""

    raw: tuple[str, ...]
    keys: tuple[str, ...]


def target_from_answers(answers: Sequence[str]) -> TargetDenotation:
    if not answers:
        raise ValueError("empty answer list")
    raw = tuple(answers)
    keys = tuple(sorted(string_match_key(a) for a in raw))
    return TargetDenotation(raw=raw, keys=keys)


def den_matches(den: Denotation, target: TargetDenotation) -> bool:
    """True when den is a value set whose keys equal the answer keys."""
    if not isinstance(den, SetD):
        return False
    if len(den.values) != len(target.keys):
        return False
    return Counter(value_match_key(v) for v in den.values) == Counter(target.keys)
