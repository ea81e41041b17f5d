"""Two-pass dynamic programming on denotations.

Pass 1 groups derivations into cells keyed by (category, size,
denotation); each cell stores one representative form and every rule
combination that lands in it, including combinations whose forms were
discarded as duplicates.  Marking walks backward from the cells whose
denotation matches the answer.  Pass 2 rebuilds only marked cells,
bottom-up and memoized, materializing every member form.

Soundness rests on rules being denotation-invariant: a combination
(cells, rule) determines the result denotation, so replaying it over
all member forms cannot leave the cell.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .answers import TargetDenotation, den_matches
from .denotations import Denotation, den_key
from .forms import CATEGORY_REL, CATEGORY_SET, EntitySet, Form
from .grammar import (
    KIND_UNARY,
    Derivation,
    Reject,
    Rule,
    RuleSet,
    apply_rule,
    base_derivations,
    redundancy_guards,
    rel_cell_key,
)
from .world import World

DEFAULT_CAP = 500_000


@dataclass
class Cell:
    index: int
    category: str
    size: int
    key: str
    den: Denotation | None
    rep: Form
    base_forms: list[Form] = field(default_factory=list)
    combos: list[tuple[int, int, int]] = field(default_factory=list)
    has_literal: bool = False
    marked: bool = False

    def operand(self):
        """What rule ``den`` functions consume for this cell."""
        return self.rep if self.category == CATEGORY_REL else self.den


@dataclass
class Chart:
    utterance: str
    world: World
    rules: RuleSet
    s_max: int
    cells: list[Cell]
    index: dict[tuple[str, int, str], int]
    by_cat_size: dict[tuple[str, int], list[int]]
    combos_total: int
    finals: list[int] = field(default_factory=list)

    def cell(self, category: str, size: int, key: str) -> Cell | None:
        i = self.index.get((category, size, key))
        return None if i is None else self.cells[i]


@dataclass(frozen=True)
class ChartStats:
    pass1_cells: int
    pass2_cells: int
    combos_total: int
    combos_marked: int
    z_size: int
    truncated: bool


def first_pass(utterance: str, world: World, rules: RuleSet, s_max: int) -> Chart:
    """Populate all cells up to s_max and record every combination."""
    if s_max < 0:
        raise ValueError("s_max must be nonnegative")
    chart = Chart(
        utterance=utterance,
        world=world,
        rules=rules,
        s_max=s_max,
        cells=[],
        index={},
        by_cat_size={},
        combos_total=0,
    )

    def get_cell(category: str, size: int, key: str, den, rep: Form) -> Cell:
        i = chart.index.get((category, size, key))
        if i is not None:
            return chart.cells[i]
        cell = Cell(len(chart.cells), category, size, key, den, rep)
        chart.cells.append(cell)
        chart.index[(category, size, key)] = cell.index
        chart.by_cat_size.setdefault((category, size), []).append(cell.index)
        return cell

    for d in base_derivations(utterance, world):
        if d.category == CATEGORY_REL:
            key = rel_cell_key(d.form, world)
        else:
            key = den_key(d.den)
        cell = get_cell(d.category, 0, key, d.den, d.form)
        if d.form not in cell.base_forms:
            cell.base_forms.append(d.form)
        if isinstance(d.form, EntitySet):
            cell.has_literal = True

    comp_rules = rules.composition_rules()

    def try_insert(rule: Rule, rule_i: int, size: int, args: tuple[Cell, ...]) -> None:
        if rule.literal_args and not all(a.has_literal for a in args):
            return
        den = rule.den(world, *(a.operand() for a in args))
        if not redundancy_guards(den, rule, [a.den for a in args], rules.guards):
            return
        key = den_key(den)
        i = chart.index.get((rule.result_cat, size, key))
        if i is None:
            rep = rule.build(*(a.rep for a in args))
            cell = get_cell(rule.result_cat, size, key, den, rep)
        else:
            cell = chart.cells[i]
        c2 = args[1].index if len(args) == 2 else -1
        cell.combos.append((rule_i, args[0].index, c2))
        chart.combos_total += 1

    for s in range(1, s_max + 1):
        for rule_i, rule in enumerate(comp_rules):
            if rule.kind == KIND_UNARY:
                for i1 in chart.by_cat_size.get((rule.arg_cats[0], s - 1), ()):
                    try_insert(rule, rule_i, s, (chart.cells[i1],))
            else:
                for s1 in range(0, s):
                    s2 = s - 1 - s1
                    if rule.commutative and s1 > s2:
                        continue
                    left = chart.by_cat_size.get((rule.arg_cats[0], s1), ())
                    right = chart.by_cat_size.get((rule.arg_cats[1], s2), ())
                    for pos, i1 in enumerate(left):
                        start = pos if rule.commutative and s1 == s2 else 0
                        for i2 in right[start:]:
                            try_insert(
                                rule, rule_i, s, (chart.cells[i1], chart.cells[i2])
                            )
    return chart


def mark_backward(chart: Chart, target: TargetDenotation) -> list[int]:
    """Mark final cells and everything reachable backward from them.

    Finals are Set cells of size >= 1 whose denotation matches the
    answer; a matching size-0 literal is not counted as a parse.
    """
    for cell in chart.cells:
        cell.marked = False
    finals = [
        c.index
        for c in chart.cells
        if c.category == CATEGORY_SET and c.size >= 1 and den_matches(c.den, target)
    ]
    chart.finals = finals
    work = list(finals)
    for i in work:
        chart.cells[i].marked = True
    while work:
        cell = chart.cells[work.pop()]
        for _, c1, c2 in cell.combos:
            for ci in (c1, c2):
                if ci >= 0 and not chart.cells[ci].marked:
                    chart.cells[ci].marked = True
                    work.append(ci)
    return finals


def second_pass(chart: Chart, cap: int = DEFAULT_CAP) -> tuple[list[Form], bool]:
    """Materialize every member form of the marked cells, bottom-up.

    Returns the consistent forms (union over final cells) sorted by
    (size, canonical string), plus a truncation flag set when the global
    cap on materialized forms was hit.
    """
    comp_rules = chart.rules.composition_rules()
    needed = [c for c in chart.cells if c.marked]
    needed.sort(key=lambda c: (c.size, c.index))
    forms_of: dict[int, list[Form]] = {}
    produced = 0
    truncated = False
    for cell in needed:
        members: list[Form] = []
        seen: set[int] = set()
        for f in cell.base_forms:
            if f.uid not in seen:
                seen.add(f.uid)
                members.append(f)
                produced += 1
        for rule_i, c1, c2 in cell.combos:
            if truncated:
                break
            rule = comp_rules[rule_i]
            left = forms_of.get(c1, ())
            if c2 < 0:
                pairs = ((f1,) for f1 in left)
            else:
                right = forms_of.get(c2, ())
                pairs = ((f1, f2) for f1 in left for f2 in right)
            for args in pairs:
                try:
                    f = rule.build(*args)
                except ValueError:
                    continue
                if f.uid in seen:
                    continue
                seen.add(f.uid)
                members.append(f)
                produced += 1
                if produced >= cap:
                    truncated = True
                    break
        forms_of[cell.index] = members
        if truncated:
            break
    out: list[Form] = []
    for i in chart.finals:
        out.extend(forms_of.get(i, ()))
    out.sort(key=lambda f: (f.size, f.canon))
    return out, truncated


def chart_stats(chart: Chart, z_size: int, truncated: bool) -> ChartStats:
    marked = [c for c in chart.cells if c.marked]
    combos_marked = sum(len(c.combos) for c in marked)
    return ChartStats(
        pass1_cells=len(chart.cells),
        pass2_cells=len(marked),
        combos_total=chart.combos_total,
        combos_marked=combos_marked,
        z_size=z_size,
        truncated=truncated,
    )


def dump_chart(chart: Chart) -> dict:
    """JSON-ready view of the chart for inspection and goldens."""
    cells = []
    for c in chart.cells:
        cells.append(
            {
                "category": c.category,
                "size": c.size,
                "key": c.key,
                "representative": c.rep.canon,
                "base_forms": [f.canon for f in c.base_forms],
                "combos": len(c.combos),
                "marked": c.marked,
            }
        )
    return {
        "utterance": chart.utterance,
        "world": chart.world.id,
        "s_max": chart.s_max,
        "cells": cells,
        "finals": list(chart.finals),
        "combos_total": chart.combos_total,
    }


@dataclass(frozen=True)
class InvarianceFailure:
    rule_id: str
    args_a: tuple[str, ...]
    args_b: tuple[str, ...]
    den_a: str
    den_b: str


@dataclass(frozen=True)
class InvarianceReport:
    rule_id: str
    trials: int
    checked: int
    failures: tuple[InvarianceFailure, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


_POOL_CACHE: dict[tuple, dict] = {}


def _derivation_pools(world: World, rules: RuleSet, s_max: int) -> dict[str, list[list[Derivation]]]:
    """Derivations grouped into denotation-equal pools per category.

    The utterance anchors every cell string so literal pools are rich.
    Cached per world since building the unpruned search is the dominant
    cost of an invariance run.
    """
    from .beam import beam_cells

    cache_key = (world.table.columns, world.table.rows, s_max, tuple(r.id for r in rules.rules))
    cached = _POOL_CACHE.get(cache_key)
    if cached is not None:
        return cached

    utterance = " ".join(
        dict.fromkeys(cell for row in world.table.rows for cell in row)
    )
    cells = beam_cells(utterance, world, rules, s_max, None, lambda _: 0.0)
    groups: dict[tuple[str, str], list[Derivation]] = {}

    def pool_key(d: Derivation) -> str:
        if d.category == CATEGORY_REL:
            return rel_cell_key(d.form, world)
        return den_key(d.den)

    for ders in cells.values():
        for d in ders:
            groups.setdefault((d.category, pool_key(d)), []).append(d)
    out: dict[str, list[list[Derivation]]] = {}
    for (cat, _), pool in sorted(groups.items()):
        out.setdefault(cat, []).append(pool)
    _POOL_CACHE[cache_key] = out
    return out


def check_invariance(
    rule: Rule,
    trials: int,
    world: World,
    rules: RuleSet | None = None,
    seed: int = 0,
    pool_s_max: int = 3,
) -> InvarianceReport:
    """Random substitution test: swapping an argument for a
    denotation-equal one must not change the result denotation.

    Trials where either application is rejected are skipped; rejection
    reasons may legitimately depend on form structure (union requires
    literals), but accepted results may not.
    """
    from .grammar import default_ruleset

    rules = rules or default_ruleset()
    pools = _derivation_pools(world, rules, pool_s_max)
    rng = random.Random(seed)
    failures: list[InvarianceFailure] = []
    checked = 0
    for _ in range(trials):
        if any(cat not in pools for cat in rule.arg_cats):
            break
        args_a: list[Derivation] = []
        args_b: list[Derivation] = []
        for cat in rule.arg_cats:
            pool = rng.choice(pools[cat])
            args_a.append(rng.choice(pool))
            args_b.append(rng.choice(pool))
        res_a = apply_rule(rule, tuple(args_a), world, rules.guards)
        res_b = apply_rule(rule, tuple(args_b), world, rules.guards)
        if isinstance(res_a, Reject) or isinstance(res_b, Reject):
            continue
        checked += 1
        if den_key(res_a.den) != den_key(res_b.den):
            failures.append(
                InvarianceFailure(
                    rule_id=rule.id,
                    args_a=tuple(a.form.canon for a in args_a),
                    args_b=tuple(b.form.canon for b in args_b),
                    den_a=den_key(res_a.den),
                    den_b=den_key(res_b.den),
                )
            )
            if len(failures) >= 5:
                break
    return InvarianceReport(rule.id, trials, checked, tuple(failures))
