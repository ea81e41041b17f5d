"""Denotation values and the operations the executor and chart share.

A denotation is one of:

* ``SetD``: a finite set of values.
* ``MapD``: a key set plus, for each key, the image set reachable through
  a binary built by chain steps.  Keys with empty images are kept.
* ``RelD``: a relation extension (set of pairs); used to recognize when
  two relation symbols denote the same edges.
* ``ErrorD``: an execution failure; absorbing under every operation.

Every operation here consumes and produces denotations only, so applying
a composition rule to denotations and executing the composed form agree
by construction.
"""

from __future__ import annotations

import json
from typing import Iterable

from .forms import Rel
from .values import (
    Date,
    Number,
    Value,
    compare_dates,
    compare_values,
    render_value,
    value_sort_key,
)
from .world import World


class SetD:
    __slots__ = ("values", "_key")

    def __init__(self, values: Iterable[Value]):
        self.values = frozenset(values)
        self._key: str | None = None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SetD) and self.values == other.values

    def __hash__(self) -> int:
        return hash(("set", self.values))

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"SetD({sorted(map(render_value, self.values))})"


class MapD:
    __slots__ = ("keys", "image", "_key")

    def __init__(self, keys: Iterable[Value], image: dict[Value, frozenset[Value]]):
        self.keys = frozenset(keys)
        if set(image) != self.keys:
            raise ValueError("map image domain must equal the key set")
        self.image = {k: frozenset(v) for k, v in image.items()}
        self._key: str | None = None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MapD) and self.keys == other.keys and self.image == other.image

    def __hash__(self) -> int:
        return hash(("map", self.keys, frozenset(self.image.items())))

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"MapD({den_key(self)})"


class RelD:
    __slots__ = ("pairs", "_key")

    def __init__(self, pairs: Iterable[tuple[Value, Value]]):
        self.pairs = frozenset(pairs)
        self._key: str | None = None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RelD) and self.pairs == other.pairs

    def __hash__(self) -> int:
        return hash(("rel", self.pairs))


class ErrorD:
    __slots__ = ("reason", "_key")

    def __init__(self, reason: str):
        self.reason = reason
        self._key: str | None = None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ErrorD) and self.reason == other.reason

    def __hash__(self) -> int:
        return hash(("error", self.reason))

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"ErrorD({self.reason!r})"


Denotation = SetD | MapD | RelD | ErrorD


def _sorted_renders(values: Iterable[Value]) -> list[str]:
    return [render_value(v) for v in sorted(values, key=value_sort_key)]


def den_to_json(d: Denotation) -> dict:
    """JSON-ready view; deterministic ordering throughout."""
    if isinstance(d, SetD):
        return {"kind": "set", "values": _sorted_renders(d.values)}
    if isinstance(d, MapD):
        image = {
            render_value(k): _sorted_renders(d.image[k])
            for k in sorted(d.keys, key=value_sort_key)
        }
        return {"kind": "map", "keys": _sorted_renders(d.keys), "image": image}
    if isinstance(d, RelD):
        pairs = sorted(
            ((render_value(a), render_value(b)) for a, b in d.pairs),
            key=lambda p: (p[0], p[1]),
        )
        return {"kind": "rel", "pairs": [list(p) for p in pairs]}
    return {"kind": "error", "reason": d.reason}


def den_key(d: Denotation) -> str:
    """Canonical string key: equal denotations get equal keys."""
    if d._key is None:
        d._key = json.dumps(den_to_json(d), separators=(",", ":"), ensure_ascii=False)
    return d._key


def _rel_index(rel: Rel, world: World):
    idx = world.relations.get(rel.name)
    if idx is None:
        return None
    return idx


def rel_extension(rel: Rel, world: World) -> Denotation:
    """Extension of a non-comparison relation; comparisons have none."""
    if rel.kind == "compare":
        raise ValueError("comparisons have no finite extension")
    idx = _rel_index(rel, world)
    if idx is None:
        return ErrorD("unknown-relation")
    if rel.reversed_:
        return RelD((b, a) for a, b in idx.pairs)
    return RelD(idx.pairs)


def _comparison_pool(op: str, arg: SetD, world: World) -> Denotation:
    """Nodes x with x OP s for some s in arg."""
    if op == "!=":
        distinct = set(arg.values)
        if not distinct:
            return SetD(())
        if len(distinct) == 1:
            return SetD(world.nodes - distinct)
        return SetD(world.nodes)
    comparables = [v for v in arg.values if isinstance(v, (Number, Date))]
    if not comparables:
        return ErrorD("type")
    kinds = {type(v) for v in comparables}
    if len(kinds) > 1:
        return ErrorD("type")
    candidates = world.numbers if kinds == {Number} else world.dates
    out = []
    for x in candidates:
        for s in comparables:
            c = compare_values(x, s)
            if c is None:
                continue
            if (
                (op == "<" and c < 0)
                or (op == ">" and c > 0)
                or (op == "<=" and c <= 0)
                or (op == ">=" and c >= 0)
            ):
                out.append(x)
                break
    return SetD(out)


def d_join(rel: Rel, arg: Denotation, world: World) -> Denotation:
    if isinstance(arg, ErrorD):
        return arg
    if not isinstance(arg, SetD):
        raise TypeError("join argument must be a set")
    if rel.kind == "compare":
        return _comparison_pool(rel.name, arg, world)
    idx = _rel_index(rel, world)
    if idx is None:
        return ErrorD("unknown-relation")
    adj = idx.forward if rel.reversed_ else idx.backward
    out: set[Value] = set()
    for s in arg.values:
        out |= adj.get(s, frozenset())
    return SetD(out)


def d_intersect(a: Denotation, b: Denotation) -> Denotation:
    if isinstance(a, ErrorD):
        return a
    if isinstance(b, ErrorD):
        return b
    if not (isinstance(a, SetD) and isinstance(b, SetD)):
        raise TypeError("intersection arguments must be sets")
    return SetD(a.values & b.values)


def d_union(a: Denotation, b: Denotation) -> Denotation:
    if isinstance(a, ErrorD):
        return a
    if isinstance(b, ErrorD):
        return b
    if not (isinstance(a, SetD) and isinstance(b, SetD)):
        raise TypeError("union arguments must be sets")
    return SetD(a.values | b.values)


def _extreme(values: Iterable[Value], pick_max: bool) -> Value | ErrorD:
    """Max or min of uniformly typed numbers or dates.

    Dates get an all-pairs comparability check first: one incomparable
    pair anywhere makes the extremum ill-defined, independent of
    iteration order.
    """
    vals = list(values)
    kinds = {type(v) for v in vals}
    if kinds == {Number}:
        return max(vals, key=lambda v: v.value) if pick_max else min(vals, key=lambda v: v.value)
    if kinds != {Date}:
        return ErrorD("type")
    for i, a in enumerate(vals):
        for b in vals[i + 1 :]:
            if compare_dates(a, b) is None:
                return ErrorD("type")
    best = vals[0]
    for v in vals[1:]:
        c = compare_dates(v, best)
        if (c > 0) if pick_max else (c < 0):
            best = v
    return best


def d_aggregate(op: str, arg: Denotation) -> Denotation:
    if isinstance(arg, ErrorD):
        return arg
    if not isinstance(arg, SetD):
        raise TypeError("aggregate argument must be a set")
    if op == "count":
        return SetD({Number(float(len(arg.values)))})
    if not arg.values:
        return ErrorD("empty")
    if op == "sum":
        if any(not isinstance(v, Number) for v in arg.values):
            return ErrorD("type")
        # sorted so float accumulation never depends on set iteration order
        return SetD({Number(sum(sorted(v.value for v in arg.values)))})
    picked = _extreme(arg.values, pick_max=(op == "max"))
    if isinstance(picked, ErrorD):
        return picked
    return SetD({picked})


def d_sub(a: Denotation, b: Denotation) -> Denotation:
    if isinstance(a, ErrorD):
        return a
    if isinstance(b, ErrorD):
        return b
    if len(a.values) != 1 or len(b.values) != 1:
        return ErrorD("nonsingleton")
    (x,) = a.values
    (y,) = b.values
    if isinstance(x, Number) and isinstance(y, Number):
        return SetD({Number(x.value - y.value)})
    if isinstance(x, Date) and isinstance(y, Date):
        if not (x.is_full() and y.is_full()):
            return ErrorD("type")
        return SetD({Number(float((x.to_pydate() - y.to_pydate()).days))})
    return ErrorD("type")


def d_map_init(unary: Denotation) -> Denotation:
    if isinstance(unary, ErrorD):
        return unary
    return MapD(unary.values, {k: frozenset((k,)) for k in unary.values})


def d_map_join(rel: Rel, m: Denotation, world: World) -> Denotation:
    if isinstance(m, ErrorD):
        return m
    image: dict[Value, frozenset[Value]] = {}
    for k in m.keys:
        step = d_join(rel, SetD(m.image[k]), world)
        if isinstance(step, ErrorD):
            return step
        image[k] = step.values
    return MapD(m.keys, image)


def d_map_intersect(m: Denotation, s: Denotation) -> Denotation:
    if isinstance(m, ErrorD):
        return m
    if isinstance(s, ErrorD):
        return s
    return MapD(m.keys, {k: m.image[k] & s.values for k in m.keys})


def d_map_count(m: Denotation) -> Denotation:
    if isinstance(m, ErrorD):
        return m
    return MapD(m.keys, {k: frozenset((Number(float(len(m.image[k]))),)) for k in m.keys})


def d_superlative(op: str, m: Denotation) -> Denotation:
    if isinstance(m, ErrorD):
        return m
    if not isinstance(m, MapD):
        raise TypeError("superlative argument must be a map")
    if not m.keys:
        return ErrorD("empty")
    pick_max = op == "argmax"
    scores: dict[Value, Value] = {}
    kinds: set[type] = set()
    for k in m.keys:
        comparables = [v for v in m.image[k] if isinstance(v, (Number, Date))]
        if not comparables:
            return ErrorD("type")
        kinds |= {type(v) for v in comparables}
        if len(kinds) > 1:
            return ErrorD("type")
        best = _extreme(comparables, pick_max)
        if isinstance(best, ErrorD):
            return best
        scores[k] = best
    top = _extreme(scores.values(), pick_max)
    if isinstance(top, ErrorD):
        return top
    winners = [k for k, s in scores.items() if compare_values(s, top) == 0]
    return SetD(winners)
