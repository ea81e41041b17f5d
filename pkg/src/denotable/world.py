"""Directed-graph worlds built from tables, plus utterance anchoring.

Rows and cells become nodes; columns become labeled edges from row nodes
to cell entity nodes.  Every row carries an Index edge to its 0-based
position and a Next edge to the following row.  Cells additionally get
Number/Num2/Date edges for parsed content and Part edges for list items.
Worlds are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .tables import RESERVED_RELATIONS, Table, normalize_cell
from .values import (
    Date,
    Entity,
    Number,
    Row,
    Value,
    normalize_entity,
    render_value,
    value_sort_key,
)

Edge = tuple[Value, Value]


@dataclass(frozen=True)
class RelationIndex:
    """One labeled edge set with forward and backward adjacency."""

    name: str
    pairs: tuple[Edge, ...]
    forward: dict[Value, frozenset[Value]]
    backward: dict[Value, frozenset[Value]]

    @staticmethod
    def from_pairs(name: str, pairs: Iterable[Edge]) -> "RelationIndex":
        uniq = sorted(set(pairs), key=lambda e: (value_sort_key(e[0]), value_sort_key(e[1])))
        fwd: dict[Value, set[Value]] = {}
        bwd: dict[Value, set[Value]] = {}
        for a, b in uniq:
            fwd.setdefault(a, set()).add(b)
            bwd.setdefault(b, set()).add(a)
        return RelationIndex(
            name=name,
            pairs=tuple(uniq),
            forward={k: frozenset(v) for k, v in fwd.items()},
            backward={k: frozenset(v) for k, v in bwd.items()},
        )


@dataclass(frozen=True)
class World:
    table: Table
    n_rows: int
    relations: dict[str, RelationIndex]
    nodes: frozenset[Value]
    numbers: frozenset[Number]
    dates: frozenset[Date]
    entities: frozenset[Entity]

    @property
    def id(self) -> str:
        return self.table.id

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.table.columns

    def rows(self) -> list[Row]:
        return [Row(i) for i in range(self.n_rows)]

    def relation(self, name: str) -> RelationIndex | None:
        return self.relations.get(name)


def build_world(table: Table) -> World:
    """Deterministically convert a table into its graph world."""
    n = len(table.rows)
    rows = [Row(i) for i in range(n)]
    edges: dict[str, list[Edge]] = {name: [] for name in table.columns}
    for builtin in RESERVED_RELATIONS:
        edges[builtin] = []

    cell_entities: dict[Entity, list[str]] = {}
    for j, col in enumerate(table.columns):
        for i in range(n):
            raw = table.rows[i][j]
            ent = Entity(normalize_entity(raw))
            edges[col].append((rows[i], ent))
            cell_entities.setdefault(ent, []).append(raw)

    edges["Next"] = [(rows[i], rows[i + 1]) for i in range(n - 1)]
    edges["Index"] = [(rows[i], Number(float(i))) for i in range(n)]

    part_entities: set[Entity] = set()
    for ent, raws in cell_entities.items():
        for raw in raws:
            interp = normalize_cell(raw)
            if interp.number is not None:
                edges["Number"].append((ent, Number(interp.number)))
            if interp.num2 is not None:
                edges["Num2"].append((ent, Number(interp.num2)))
            if interp.date is not None:
                edges["Date"].append((ent, interp.date))
            for part in interp.parts:
                target = Entity(normalize_entity(part))
                part_entities.add(target)
                edges["Part"].append((ent, target))

    relations = {name: RelationIndex.from_pairs(name, pairs) for name, pairs in edges.items()}

    nodes: set[Value] = set(rows)
    for rel in relations.values():
        for a, b in rel.pairs:
            nodes.add(a)
            nodes.add(b)

    return World(
        table=table,
        n_rows=n,
        relations=relations,
        nodes=frozenset(nodes),
        numbers=frozenset(v for v in nodes if isinstance(v, Number)),
        dates=frozenset(v for v in nodes if isinstance(v, Date)),
        entities=frozenset(v for v in nodes if isinstance(v, Entity)),
    )


def export_edges(world: World) -> str:
    """Line-oriented debug dump: ``REL <name> <src> <dst>``, one edge per line."""
    lines = []
    names = list(world.table.columns) + list(RESERVED_RELATIONS)
    for name in names:
        rel = world.relations[name]
        for a, b in rel.pairs:
            lines.append(f"REL {name} {render_value(a)} {render_value(b)}")
    return "\n".join(lines) + ("\n" if lines else "")


_TOKEN_RE = re.compile(r"\d+\.\d+|[a-z0-9]+")

_MAX_SPAN_TOKENS = 6
_JACCARD_THRESHOLD = 0.8


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Anchor:
    span: tuple[int, int]
    value: Value
    score: float


def _entity_match_score(span_tokens: tuple[str, ...], entity_tokens: tuple[str, ...]) -> float:
    """1.0 for equality, fractional for a token prefix, else Jaccard >= 0.8.

    Prefixes are taken at token granularity ("lukas" matches "lukas bauer",
    "the" does not match "thailand") to keep the base cells small.
    """
    if not entity_tokens:
        return 0.0
    if span_tokens == entity_tokens:
        return 1.0
    if len(span_tokens) < len(entity_tokens) and entity_tokens[: len(span_tokens)] == span_tokens:
        return len(span_tokens) / len(entity_tokens)
    a, b = set(span_tokens), set(entity_tokens)
    jaccard = len(a & b) / len(a | b)
    return jaccard if jaccard >= _JACCARD_THRESHOLD else 0.0


def anchor_entities(utterance: str, world: World) -> list[Anchor]:
    """Every (span, value) pair whose span fuzzily matches a world value.

    Entities match by normalized-token comparison; numbers and dates match
    by parse equality.  Overlapping anchors are all kept.
    """
    tokens = tokenize(utterance)
    entity_tokens = {
        ent: tuple(tokenize(ent.text)) for ent in world.entities if ent.text
    }
    best: dict[tuple[tuple[int, int], Value], float] = {}
    for start in range(len(tokens)):
        for end in range(start + 1, min(start + _MAX_SPAN_TOKENS, len(tokens)) + 1):
            span = (start, end)
            span_tokens = tuple(tokens[start:end])
            span_text = " ".join(span_tokens)
            for ent, etoks in entity_tokens.items():
                score = _entity_match_score(span_tokens, etoks)
                if score > 0.0:
                    key = (span, ent)
                    if score > best.get(key, 0.0):
                        best[key] = score
            if len(span_tokens) == 1:
                try:
                    num = Number(float(span_text.replace(",", "")))
                except ValueError:
                    num = None
                if num is not None and num in world.numbers:
                    best[(span, num)] = 1.0
            interp = normalize_cell(span_text)
            if interp.date is not None and interp.date in world.dates:
                best[(span, interp.date)] = max(best.get((span, interp.date), 0.0), 1.0)
    anchors = [Anchor(span, value, score) for (span, value), score in best.items()]
    anchors.sort(key=lambda a: (a.span, value_sort_key(a.value)))
    return anchors
