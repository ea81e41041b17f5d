"""Independent enumeration oracle for chart completeness tests.

Enumerates every guard-surviving form by direct recursion over the rule
templates, with no denotation-keyed collapsing, executing each candidate
to evaluate the guards.  Deliberately shares no machinery with the chart
beyond the form constructors and the executor.
"""

from __future__ import annotations

from denotable.denotations import ErrorD, SetD
from denotable.executor import Executor
from denotable.forms import (
    Form,
    aggregate,
    all_rows,
    builtin,
    column,
    compare,
    entity_set,
    intersect,
    join,
    map_form,
    reverse,
    subtract,
    superlative,
    union_entities,
    var,
)
from denotable.tables import RESERVED_RELATIONS
from denotable.values import value_sort_key
from denotable.world import World, anchor_entities

AGG_OPS = ("count", "max", "min", "sum")
SUP_OPS = ("argmax", "argmin")
CMP_OPS = ("<", ">", "<=", ">=", "!=")


def enumerate_guarded(utterance: str, world: World, s_max: int) -> dict[int, set[Form]]:
    """Set-category forms per size 1..s_max that survive the guards."""
    ex = Executor(world)

    def den(f: Form):
        return ex.execute(f)

    def keep_set(f: Form) -> bool:
        d = den(f)
        return isinstance(d, SetD) and len(d.values) > 0

    def keep_map(f: Form) -> bool:
        return not isinstance(den(f), ErrorD)

    def is_singleton(f: Form) -> bool:
        d = den(f)
        return isinstance(d, SetD) and len(d.values) == 1

    best: dict = {}
    for a in anchor_entities(utterance, world):
        prev = best.get(a.value)
        if prev is None or a.score > prev.score:
            best[a.value] = a
    literals = [entity_set(v) for v in sorted(best, key=value_sort_key)]

    rels = []
    for name in world.column_names:
        rels += [column(name), reverse(column(name))]
    for name in RESERVED_RELATIONS:
        rels += [builtin(name), reverse(builtin(name))]
    rels += [compare(op) for op in CMP_OPS]

    sets: dict[int, set[Form]] = {0: set(literals) | {all_rows()}}
    maps: dict[int, set[Form]] = {0: set()}

    for s in range(1, s_max + 1):
        cur_sets: set[Form] = set()
        cur_maps: set[Form] = set()

        for f in sets[s - 1]:
            for r in rels:
                g = join(r, f)
                if keep_set(g):
                    cur_sets.add(g)

        for s1 in range(0, s):
            s2 = s - 1 - s1
            for a in sets[s1]:
                for b in sets.get(s2, ()):
                    g = intersect(a, b)
                    if keep_set(g):
                        cur_sets.add(g)

        if s == 1:
            for a in literals:
                for b in literals:
                    g = union_entities(a, b)
                    if keep_set(g):
                        cur_sets.add(g)

        for f in sets[s - 1]:
            if not is_singleton(f):
                for op in AGG_OPS:
                    g = aggregate(op, f)
                    if keep_set(g):
                        cur_sets.add(g)

        for s1 in range(0, s):
            s2 = s - 1 - s1
            for a in sets[s1]:
                for b in sets.get(s2, ()):
                    g = subtract(a, b)
                    if keep_set(g):
                        cur_sets.add(g)

        for m in maps[s - 1]:
            for op in SUP_OPS:
                g = superlative(op, m)
                if keep_set(g):
                    cur_sets.add(g)

        for u in sets[s - 1]:
            g = map_form(u, var())
            if keep_map(g):
                cur_maps.add(g)

        for m in maps[s - 1]:
            for r in rels:
                g = map_form(m.unary, join(r, m.chain))
                if keep_map(g):
                    cur_maps.add(g)
            g = map_form(m.unary, aggregate("count", m.chain))
            if keep_map(g):
                cur_maps.add(g)

        for s1 in range(0, s):
            s2 = s - 1 - s1
            for m in maps[s1]:
                for b in sets.get(s2, ()):
                    g = map_form(m.unary, intersect(m.chain, b))
                    if keep_map(g):
                        cur_maps.add(g)

        sets[s] = cur_sets
        maps[s] = cur_maps

    return {s: sets[s] for s in range(1, s_max + 1)}


def enumerate_consistent(utterance: str, world: World, s_max: int, target) -> set[Form]:
    from denotable.answers import den_matches

    ex = Executor(world)
    out: set[Form] = set()
    for forms in enumerate_guarded(utterance, world, s_max).values():
        for f in forms:
            if den_matches(ex.execute(f), target):
                out.add(f)
    return out
