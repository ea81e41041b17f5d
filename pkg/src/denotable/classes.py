"""Equivalence classes of consistent forms across perturbed worlds.

Forms are grouped by their tuple of denotations over the generated
worlds (the original world is not part of the tuple); an execution
error is an ordinary tuple component.  World subsets are scored by
sum(|F| * log2 |F|) over the classes the subset induces, which is the
annotation-entropy objective up to the constant 1/|Z| factor; the
summation order is fixed so equal partitions give bit-equal scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .answers import TargetDenotation, den_matches
from .denotations import Denotation, den_key
from .executor import execute_all
from .forms import Form
from .world import World


@dataclass(frozen=True)
class EqClass:
    """Forms indistinguishable by denotation on every generated world."""

    key: tuple[str, ...]
    dens: tuple[Denotation, ...]
    members: tuple[Form, ...]

    @property
    def representative(self) -> Form:
        return self.members[0]


def equivalence_classes(forms: Sequence[Form], worlds: Sequence[World]) -> list[EqClass]:
    """Partition forms by their denotation tuple over `worlds`."""
    if not worlds:
        raise ValueError("need at least one world")
    per_world = [execute_all(list(forms), w) for w in worlds]
    groups: dict[tuple[str, ...], list[int]] = {}
    for fi in range(len(forms)):
        key = tuple(den_key(per_world[wi][fi]) for wi in range(len(worlds)))
        groups.setdefault(key, []).append(fi)
    classes = []
    for key, idxs in groups.items():
        members = tuple(sorted((forms[i] for i in idxs), key=lambda f: (f.size, f.canon)))
        dens = tuple(per_world[wi][idxs[0]] for wi in range(len(worlds)))
        classes.append(EqClass(key=key, dens=dens, members=members))
    classes.sort(key=lambda c: (c.representative.size, c.representative.canon))
    return classes


def partition_objective(sizes: Iterable[int]) -> float:
    """sum(|F| log2 |F|), summed over sorted sizes for stable floats."""
    total = 0.0
    for s in sorted(sizes, reverse=True):
        if s < 0:
            raise ValueError("negative class size")
        if s > 1:
            total += s * math.log2(s)
    return total


def entropy(sizes: Iterable[int], q: int) -> float:
    """Expected annotation bits per form: partition objective over |Q|."""
    if q <= 0:
        raise ValueError("|Q| must be positive")
    return partition_objective(sizes) / q


def _class_codes(classes: Sequence[EqClass]) -> np.ndarray:
    """Per-world small-integer codes for each class's denotation key."""
    k = len(classes[0].key)
    codes = np.empty((len(classes), k), dtype=np.int64)
    for w in range(k):
        seen: dict[str, int] = {}
        for ci, c in enumerate(classes):
            codes[ci, w] = seen.setdefault(c.key[w], len(seen))
    return codes


@dataclass(frozen=True)
class Selection:
    worlds: tuple[int, ...]
    objective: float
    partition: tuple[tuple[Form, ...], ...]


def select_worlds(classes: Sequence[EqClass], l: int) -> Selection:
    """The size-l world subset minimizing the partition objective.

    Exhaustive over all C(k, l) subsets, sharing refinement work along
    common prefixes; ties resolve to the lexicographically smallest
    index tuple because subsets are visited in lexicographic order and
    only strict improvements are kept.
    """
    if not classes:
        raise ValueError("no classes to separate")
    k = len(classes[0].key)
    if not 0 < l <= k:
        raise ValueError(f"need 0 < l <= {k}, got {l}")
    sizes = np.array([len(c.members) for c in classes], dtype=np.int64)
    codes = _class_codes(classes)
    best_worlds: tuple[int, ...] | None = None
    best_obj = math.inf
    best_group: np.ndarray | None = None

    def dfs(group: np.ndarray, start: int, chosen: tuple[int, ...]) -> None:
        nonlocal best_worlds, best_obj, best_group
        if len(chosen) == l:
            counts = np.bincount(group, weights=sizes)
            obj = partition_objective(int(c) for c in counts if c > 0)
            if obj < best_obj:
                best_worlds, best_obj, best_group = chosen, obj, group.copy()
            return
        remaining = l - len(chosen) - 1
        for w in range(start, k - remaining):
            combined = group * (int(codes[:, w].max()) + 1) + codes[:, w]
            _, child = np.unique(combined, return_inverse=True)
            dfs(child, w + 1, chosen + (w,))

    dfs(np.zeros(len(classes), dtype=np.int64), 0, ())
    assert best_worlds is not None and best_group is not None
    buckets: dict[int, list[int]] = {}
    for ci, g in enumerate(best_group):
        buckets.setdefault(int(g), []).append(ci)
    parts = []
    for idxs in buckets.values():
        members = sorted(
            (f for i in idxs for f in classes[i].members), key=lambda f: (f.size, f.canon)
        )
        parts.append(tuple(members))
    parts.sort(key=lambda ms: (ms[0].size, ms[0].canon))
    return Selection(worlds=best_worlds, objective=best_obj, partition=tuple(parts))


@dataclass(frozen=True)
class ClassOutcome:
    representative: str
    members: int
    distance: int
    survived: bool


def prune(
    classes: Sequence[EqClass],
    annotations: Mapping[int, TargetDenotation],
    m: int = 0,
) -> tuple[list[EqClass], list[ClassOutcome]]:
    """Keep classes within Hamming distance m of the annotations.

    Distance counts annotated worlds whose class denotation does not
    match the annotated answer; errors never match.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    survivors: list[EqClass] = []
    report: list[ClassOutcome] = []
    for c in classes:
        distance = sum(
            0 if den_matches(c.dens[w], target) else 1
            for w, target in annotations.items()
        )
        ok = distance <= m
        if ok:
            survivors.append(c)
        report.append(
            ClassOutcome(
                representative=c.representative.canon,
                members=len(c.members),
                distance=distance,
                survived=ok,
            )
        )
    return survivors, report


def surviving_forms(classes: Sequence[EqClass]) -> list[Form]:
    forms = [f for c in classes for f in c.members]
    forms.sort(key=lambda f: (f.size, f.canon))
    return forms


def greedy_next_world(
    classes: Sequence[EqClass], candidates: Sequence[int]
) -> int | None:
    """The unannotated world whose answer most reduces the objective.

    None when fewer than two classes survive (nothing left to separate)
    or no candidate worlds remain; ties resolve to the lowest index.
    """
    if len(classes) <= 1 or not candidates:
        return None
    best_w: int | None = None
    best_obj = math.inf
    for w in sorted(candidates):
        groups: dict[str, int] = {}
        for c in classes:
            groups[c.key[w]] = groups.get(c.key[w], 0) + len(c.members)
        obj = partition_objective(groups.values())
        if obj < best_obj:
            best_w, best_obj = w, obj
    return best_w
