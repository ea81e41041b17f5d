"""Executing logical forms against a world.

An ``Executor`` memoizes per node id, and hash-consing makes structurally
equal subforms share ids, so executing a batch of forms costs one visit
per distinct subform (the forms make a DAG, not a forest).
"""

from __future__ import annotations

from .denotations import (
    Denotation,
    ErrorD,
    SetD,
    d_aggregate,
    d_intersect,
    d_join,
    d_map_count,
    d_map_init,
    d_map_intersect,
    d_map_join,
    d_sub,
    d_superlative,
    d_union,
    rel_extension,
)
from .forms import (
    Aggregate,
    AllRows,
    EntitySet,
    Form,
    Intersect,
    Join,
    MapForm,
    Rel,
    Sub,
    Superlative,
    UnionEnt,
    Var,
)
from .world import World


class Executor:
    """Evaluates forms over one world, caching every subform's denotation."""

    def __init__(self, world: World):
        self.world = world
        self._cache: dict[int, Denotation] = {}

    def execute(self, f: Form) -> Denotation:
        if f.has_var:
            raise ValueError("cannot execute an open chain; wrap it in a map")
        if isinstance(f, Rel):
            if f.kind == "compare":
                raise ValueError("comparisons have no finite extension")
            return rel_extension(f, self.world)
        return self._eval(f)

    def _eval(self, f: Form) -> Denotation:
        cached = self._cache.get(f.uid)
        if cached is not None:
            return cached
        d = self._eval_inner(f)
        self._cache[f.uid] = d
        return d

    def _eval_inner(self, f: Form) -> Denotation:
        w = self.world
        if isinstance(f, EntitySet):
            return SetD((f.value,))
        if isinstance(f, AllRows):
            return SetD(w.rows())
        if isinstance(f, Join):
            return d_join(f.rel, self._eval(f.arg), w)
        if isinstance(f, Intersect):
            return d_intersect(self._eval(f.left), self._eval(f.right))
        if isinstance(f, UnionEnt):
            return d_union(self._eval(f.left), self._eval(f.right))
        if isinstance(f, Aggregate):
            return d_aggregate(f.op, self._eval(f.arg))
        if isinstance(f, Sub):
            return d_sub(self._eval(f.left), self._eval(f.right))
        if isinstance(f, MapForm):
            return self._eval_map(f)
        if isinstance(f, Superlative):
            return d_superlative(f.op, self._eval_map(f.map))
        raise TypeError(f"cannot execute {type(f).__name__}")

    def _eval_map(self, f: MapForm) -> Denotation:
        cached = self._cache.get(f.uid)
        if cached is not None:
            return cached
        d = d_map_init(self._eval(f.unary))
        for step in _chain_steps(f.chain):
            if isinstance(d, ErrorD):
                break
            if step[0] == "join":
                d = d_map_join(step[1], d, self.world)
            elif step[0] == "isect":
                d = d_map_intersect(d, self._eval(step[1]))
            else:
                d = d_map_count(d)
        self._cache[f.uid] = d
        return d


def _chain_steps(chain: Form) -> list[tuple]:
    """Chain operations from innermost (at the variable) outward."""
    steps: list[tuple] = []
    node = chain
    while not isinstance(node, Var):
        if isinstance(node, Join):
            steps.append(("join", node.rel))
            node = node.arg
        elif isinstance(node, Intersect):
            steps.append(("isect", node.right))
            node = node.left
        elif isinstance(node, Aggregate):
            steps.append(("count",))
            node = node.arg
        else:
            raise TypeError(f"not a chain node: {type(node).__name__}")
    steps.reverse()
    return steps


def execute(f: Form, world: World) -> Denotation:
    return Executor(world).execute(f)


def execute_all(forms: list[Form], world: World) -> list[Denotation]:
    """One pass over many forms with a shared subform cache."""
    ex = Executor(world)
    return [ex.execute(f) for f in forms]
