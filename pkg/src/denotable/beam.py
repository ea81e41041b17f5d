"""Floating beam search over the deduction rules.

Cells are (category, size) pairs.  Sizes are filled in order; a cell is
deduplicated by canonical form, then cut to the beam width by score
(ties broken by canonical string), so the result is deterministic for a
fixed seed.  With an unlimited beam the search enumerates every
derivable form, which is what the chart-completeness tests compare
against.
"""

from __future__ import annotations

import hashlib
from typing import Callable

from .forms import CATEGORY_SET, Form
from .grammar import (
    KIND_BINARY,
    KIND_UNARY,
    Derivation,
    Reject,
    RuleSet,
    apply_rule,
    base_derivations,
)
from .world import World

Scorer = Callable[[Derivation], float]


def default_scorer(seed: int) -> Scorer:
    """Uniform pseudo-random score, a pure function of the canonical form."""

    def score(d: Derivation) -> float:
        digest = hashlib.sha256(f"{seed}:{d.form.canon}".encode()).digest()
        return int.from_bytes(digest[:8], "big") / 2.0**64

    return score


def beam_cells(
    utterance: str,
    world: World,
    rules: RuleSet,
    s_max: int,
    beam: int | None,
    scorer: Scorer,
) -> dict[tuple[str, int], list[Derivation]]:
    """Run the search and return every populated (category, size) cell."""
    if s_max < 1:
        raise ValueError("s_max must be at least 1")
    if beam is not None and beam < 1:
        raise ValueError("beam must be positive or None")

    cells: dict[tuple[str, int], list[Derivation]] = {}
    for d in base_derivations(utterance, world):
        cells.setdefault((d.category, 0), []).append(d)

    comp_rules = rules.composition_rules()
    for s in range(1, s_max + 1):
        fresh: dict[str, list[Derivation]] = {}
        for rule in comp_rules:
            if rule.kind == KIND_UNARY:
                for a in cells.get((rule.arg_cats[0], s - 1), ()):
                    res = apply_rule(rule, (a,), world, rules.guards)
                    if not isinstance(res, Reject):
                        fresh.setdefault(rule.result_cat, []).append(res)
            else:
                for s1 in range(0, s):
                    s2 = s - 1 - s1
                    if rule.commutative and s1 > s2:
                        continue
                    left = cells.get((rule.arg_cats[0], s1), ())
                    right = cells.get((rule.arg_cats[1], s2), ())
                    for i, a in enumerate(left):
                        start = i if rule.commutative and s1 == s2 else 0
                        for b in right[start:]:
                            res = apply_rule(rule, (a, b), world, rules.guards)
                            if not isinstance(res, Reject):
                                fresh.setdefault(rule.result_cat, []).append(res)
        for cat, derivs in fresh.items():
            kept: list[Derivation] = []
            seen: set[int] = set()
            for d in derivs:
                if d.form.uid not in seen:
                    seen.add(d.form.uid)
                    kept.append(d)
            if beam is not None and len(kept) > beam:
                kept.sort(key=lambda d: (-scorer(d), d.form.canon))
                kept = kept[:beam]
            kept.sort(key=lambda d: d.form.canon)
            cells[(cat, s)] = kept
    return cells


def beam_search(
    utterance: str,
    world: World,
    rules: RuleSet,
    s_max: int,
    beam: int | None,
    scorer: Scorer,
) -> list[Derivation]:
    """All surviving Set derivations of size 1..s_max, ordered by
    (size, canonical form).  Base cells are never pruned."""
    cells = beam_cells(utterance, world, rules, s_max, beam, scorer)
    out: list[Derivation] = []
    for (cat, s), kept in cells.items():
        if cat == CATEGORY_SET and s >= 1:
            out.extend(kept)
    out.sort(key=lambda d: (d.size, d.form.canon))
    return out


def beam_forms(derivs: list[Derivation]) -> list[Form]:
    return [d.form for d in derivs]
