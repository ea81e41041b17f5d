"""Deduction rules: categories, derivations, rule application, guards.

Rules come in four templates: span-triggered bases, empty-triggered
bases, and unary or binary compositions.  Every composition rule carries
two aligned functions: ``build`` constructs the result form from argument
forms, and ``den`` computes the result denotation from argument
denotations (plus the world).  Keeping ``den`` a function of argument
denotations only is what lets the chart collapse forms that execute
alike.

Multi-operator families (aggregates, superlatives) are one rule per
operator, so recording just (argument cell, rule id) pins down the
result denotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .denotations import (
    Denotation,
    ErrorD,
    MapD,
    RelD,
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
    den_key,
    rel_extension,
)
from .forms import (
    CATEGORY_MAP,
    CATEGORY_REL,
    CATEGORY_SET,
    COMPARE_OPS,
    EntitySet,
    Form,
    MapForm,
    Rel,
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
from .tables import RESERVED_RELATIONS
from .values import value_sort_key
from .world import Anchor, World, anchor_entities

KIND_BASE_SPAN = "base-span"
KIND_BASE_EMPTY = "base-empty"
KIND_UNARY = "unary-comp"
KIND_BINARY = "binary-comp"

GUARD_DENY_EMPTY = "deny-empty"
GUARD_DENY_ERROR = "deny-error"
GUARD_SINGLETON_AGGREGATE = "singleton-aggregate"

ALL_GUARDS = (GUARD_DENY_EMPTY, GUARD_DENY_ERROR, GUARD_SINGLETON_AGGREGATE)

AGGREGATE_RULE_IDS = ("C-agg-count", "C-agg-max", "C-agg-min", "C-agg-sum")


@dataclass(frozen=True)
class Rule:
    """One deduction rule; ``build`` and ``den`` must agree semantically."""

    id: str
    kind: str
    arg_cats: tuple[str, ...]
    result_cat: str
    build: Callable[..., Form] | None = None
    den: Callable[..., Denotation] | None = None
    reconstructed: bool = False
    commutative: bool = False
    literal_args: bool = False


@dataclass(frozen=True)
class Derivation:
    """A form plus how it was built; provenance replays to the same form."""

    form: Form
    category: str
    size: int
    rule_id: str
    children: tuple["Derivation", ...] = ()
    anchor: Anchor | None = None
    den: Denotation | None = None


@dataclass(frozen=True)
class Reject:
    reason: str  # "category" | "guard"


def _rule_list() -> list[Rule]:
    rules: list[Rule] = [
        Rule("B1", KIND_BASE_SPAN, (), CATEGORY_SET),
        Rule("B-rows", KIND_BASE_EMPTY, (), CATEGORY_SET, reconstructed=True),
        Rule("B5", KIND_BASE_EMPTY, (), CATEGORY_REL),
        Rule(
            "C1",
            KIND_BINARY,
            (CATEGORY_SET, CATEGORY_REL),
            CATEGORY_SET,
            build=lambda s, r: join(r, s),
            den=lambda world, s, r: d_join(r, s, world),
        ),
        Rule(
            "C-isect",
            KIND_BINARY,
            (CATEGORY_SET, CATEGORY_SET),
            CATEGORY_SET,
            build=intersect,
            den=lambda world, a, b: d_intersect(a, b),
            reconstructed=True,
            commutative=True,
        ),
        Rule(
            "C-union",
            KIND_BINARY,
            (CATEGORY_SET, CATEGORY_SET),
            CATEGORY_SET,
            build=union_entities,
            den=lambda world, a, b: d_union(a, b),
            reconstructed=True,
            commutative=True,
            literal_args=True,
        ),
    ]
    for op in ("count", "max", "min", "sum"):
        rules.append(
            Rule(
                f"C-agg-{op}",
                KIND_UNARY,
                (CATEGORY_SET,),
                CATEGORY_SET,
                build=(lambda op: lambda s: aggregate(op, s))(op),
                den=(lambda op: lambda world, s: d_aggregate(op, s))(op),
                reconstructed=True,
            )
        )
    rules += [
        Rule(
            "C-sub",
            KIND_BINARY,
            (CATEGORY_SET, CATEGORY_SET),
            CATEGORY_SET,
            build=subtract,
            den=lambda world, a, b: d_sub(a, b),
            reconstructed=True,
        ),
        Rule(
            "M1",
            KIND_UNARY,
            (CATEGORY_SET,),
            CATEGORY_MAP,
            build=lambda u: map_form(u, var()),
            den=lambda world, u: d_map_init(u),
        ),
        Rule(
            "M2",
            KIND_BINARY,
            (CATEGORY_MAP, CATEGORY_REL),
            CATEGORY_MAP,
            build=lambda m, r: map_form(m.unary, join(r, m.chain)),
            den=lambda world, m, r: d_map_join(r, m, world),
        ),
        Rule(
            "M-isect",
            KIND_BINARY,
            (CATEGORY_MAP, CATEGORY_SET),
            CATEGORY_MAP,
            build=lambda m, s: map_form(m.unary, intersect(m.chain, s)),
            den=lambda world, m, s: d_map_intersect(m, s),
            reconstructed=True,
        ),
        Rule(
            "M-count",
            KIND_UNARY,
            (CATEGORY_MAP,),
            CATEGORY_MAP,
            build=lambda m: map_form(m.unary, aggregate("count", m.chain)),
            den=lambda world, m: d_map_count(m),
            reconstructed=True,
        ),
    ]
    for op in ("argmax", "argmin"):
        rules.append(
            Rule(
                f"M6-{op}",
                KIND_UNARY,
                (CATEGORY_MAP,),
                CATEGORY_SET,
                build=(lambda op: lambda m: superlative(op, m))(op),
                den=(lambda op: lambda world, m: d_superlative(op, m))(op),
            )
        )
    return rules


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    guards: tuple[str, ...] = ALL_GUARDS

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def composition_rules(self) -> list[Rule]:
        return [r for r in self.rules if r.kind in (KIND_UNARY, KIND_BINARY)]


def default_ruleset() -> RuleSet:
    return RuleSet(tuple(_rule_list()))


def ruleset_manifest(rs: RuleSet) -> str:
    """Text form of a RuleSet: `rule <id>` and `guard <name>` lines."""
    lines = ["# enabled deduction rules and guards"]
    lines += [f"rule {r.id}" for r in rs.rules]
    lines += [f"guard {g}" for g in rs.guards]
    return "\n".join(lines) + "\n"


def parse_ruleset(text: str) -> RuleSet:
    """Inverse of ruleset_manifest; unknown ids are rejected."""
    known = {r.id: r for r in _rule_list()}
    rules: list[Rule] = []
    guards: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("rule", "guard"):
            raise ValueError(f"bad manifest line {lineno}: {raw!r}")
        if parts[0] == "rule":
            if parts[1] not in known:
                raise ValueError(f"unknown rule id {parts[1]!r} on line {lineno}")
            rules.append(known[parts[1]])
        else:
            if parts[1] not in ALL_GUARDS:
                raise ValueError(f"unknown guard {parts[1]!r} on line {lineno}")
            guards.append(parts[1])
    if not rules:
        raise ValueError("manifest enables no rules")
    return RuleSet(tuple(dict.fromkeys(rules)), tuple(dict.fromkeys(guards)))


def redundancy_guards(
    result: Denotation,
    rule: Rule,
    arg_dens: Sequence[Denotation],
    guards: Sequence[str] = ALL_GUARDS,
) -> bool:
    """True when the result may enter a cell, False to deny."""
    if GUARD_DENY_ERROR in guards and isinstance(result, ErrorD):
        return False
    if GUARD_DENY_EMPTY in guards and isinstance(result, SetD) and not result.values:
        return False
    if GUARD_SINGLETON_AGGREGATE in guards and rule.id in AGGREGATE_RULE_IDS:
        arg = arg_dens[0]
        if isinstance(arg, SetD) and len(arg.values) == 1:
            return False
    return True


def _operand(arg: Derivation):
    """What a rule's ``den`` sees: Rel args by form, others by denotation."""
    return arg.form if arg.category == CATEGORY_REL else arg.den


def apply_rule(
    rule: Rule, args: Sequence[Derivation], world: World, guards: Sequence[str] = ALL_GUARDS
) -> Derivation | Reject:
    """Build the composed derivation, or explain the rejection."""
    if rule.kind not in (KIND_UNARY, KIND_BINARY):
        return Reject("category")
    if tuple(a.category for a in args) != rule.arg_cats:
        return Reject("category")
    if rule.literal_args and not all(isinstance(a.form, EntitySet) for a in args):
        return Reject("guard")
    try:
        form = rule.build(*(a.form for a in args))
    except ValueError:
        return Reject("guard")
    den = rule.den(world, *(_operand(a) for a in args))
    if not redundancy_guards(den, rule, [a.den for a in args], guards):
        return Reject("guard")
    return Derivation(
        form=form,
        category=rule.result_cat,
        size=form.size,
        rule_id=rule.id,
        children=tuple(args),
        den=den,
    )


def base_relations(world: World) -> list[Rel]:
    """Every relation symbol a world supports, forward and reversed."""
    rels: list[Rel] = []
    for name in world.column_names:
        rels.append(column(name))
        rels.append(reverse(column(name)))
    for name in RESERVED_RELATIONS:
        rels.append(builtin(name))
        rels.append(reverse(builtin(name)))
    for op in COMPARE_OPS:
        rels.append(compare(op))
    return rels


def base_derivations(utterance: str, world: World) -> list[Derivation]:
    """Size-0 derivations: anchored literals, the all-rows set, relations.

    One derivation per anchored value (best-scoring span wins), ordered
    deterministically.
    """
    best_anchor: dict = {}
    for anchor in anchor_entities(utterance, world):
        prev = best_anchor.get(anchor.value)
        if prev is None or anchor.score > prev.score:
            best_anchor[anchor.value] = anchor
    out: list[Derivation] = []
    for value in sorted(best_anchor, key=value_sort_key):
        anchor = best_anchor[value]
        out.append(
            Derivation(
                form=entity_set(value),
                category=CATEGORY_SET,
                size=0,
                rule_id="B1",
                anchor=anchor,
                den=SetD((value,)),
            )
        )
    rows_form = all_rows()
    out.append(
        Derivation(
            form=rows_form,
            category=CATEGORY_SET,
            size=0,
            rule_id="B-rows",
            den=SetD(world.rows()),
        )
    )
    for rel in base_relations(world):
        den: Denotation | None
        if rel.kind == "compare":
            den = None
        else:
            ext = rel_extension(rel, world)
            den = ext if isinstance(ext, RelD) else None
        out.append(
            Derivation(form=rel, category=CATEGORY_REL, size=0, rule_id="B5", den=den)
        )
    return out


def rel_cell_key(rel: Rel, world: World) -> str:
    """Cell key for a relation: extension for finite ones, the operator
    itself for comparisons (their extension is infinite)."""
    if rel.kind == "compare":
        return f'{{"kind":"compare","op":"{rel.name}"}}'
    return den_key(rel_extension(rel, world))
