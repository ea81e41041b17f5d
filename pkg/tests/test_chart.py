"""Two-pass chart: completeness, marking, caps, invariance checking."""

import json

import pytest
from brute_force import enumerate_consistent

from denotable.answers import target_from_answers
from denotable.chart import (
    Chart,
    chart_stats,
    check_invariance,
    dump_chart,
    first_pass,
    mark_backward,
    second_pass,
)
from denotable.denotations import SetD, den_key
from denotable.executor import execute
from denotable.forms import CATEGORY_REL, CATEGORY_SET
from denotable.grammar import Rule, default_ruleset, parse_ruleset, ruleset_manifest
from denotable.values import Number
from denotable.world import World

QUESTION = "Where did the last 1st place finish occur?"

Z4_CANONS = [
    "(join (reverse Venue) (argmax (map (rows) (join (reverse Index) x))))",
    "(join (reverse Venue) (join (reverse Next) (join (reverse Next) (join (reverse Next) (rows)))))",
    '(join (reverse Venue) (join (reverse Next) (join (reverse Next) (join Position (entity "1st")))))',
    "(join (reverse Venue) (join Index (count (join (reverse Next) (rows)))))",
    "(join (reverse Venue) (join Index (count (join (reverse Position) (rows)))))",
    "(join (reverse Venue) (join Index (count (join Next (rows)))))",
    "(join (reverse Venue) (join Index (max (join (reverse Index) (rows)))))",
]


@pytest.fixture(scope="module")
def athletics_chart(athletics_world: World) -> Chart:
    chart = first_pass(QUESTION, athletics_world, default_ruleset(), 4)
    mark_backward(chart, target_from_answers(["Thailand"]))
    return chart


def test_consistent_forms_frozen(athletics_chart: Chart):
    z, truncated = second_pass(athletics_chart)
    assert not truncated
    assert [f.canon for f in z] == Z4_CANONS


def test_matches_brute_force(athletics_chart: Chart, athletics_world: World):
    z, _ = second_pass(athletics_chart)
    oracle = enumerate_consistent(
        QUESTION, athletics_world, 4, target_from_answers(["Thailand"])
    )
    assert {f.uid for f in z} == {f.uid for f in oracle}


def test_stats_and_marking(athletics_chart: Chart):
    z, truncated = second_pass(athletics_chart)
    st = chart_stats(athletics_chart, len(z), truncated)
    assert st.pass1_cells == 2230
    assert st.pass2_cells == 21
    assert st.combos_total == 9038
    assert st.z_size == 7
    assert st.pass2_cells < st.pass1_cells
    assert 0 < st.combos_marked <= st.combos_total
    # operands of marked combos are themselves marked
    for cell in athletics_chart.cells:
        if cell.marked:
            for _, c1, c2 in cell.combos:
                assert athletics_chart.cells[c1].marked
                if c2 >= 0:
                    assert athletics_chart.cells[c2].marked


def test_finals_match_target(athletics_chart: Chart):
    assert len(athletics_chart.finals) == 1
    final = athletics_chart.cells[athletics_chart.finals[0]]
    assert final.category == CATEGORY_SET
    assert final.size >= 1
    values = final.den.values
    assert len(values) == 1 and next(iter(values)).text == "thailand"


def test_cell_keys_recompute(athletics_chart: Chart, athletics_world: World):
    """Representatives re-execute to their cell's denotation key."""
    for cell in athletics_chart.cells:
        if cell.category == CATEGORY_REL:
            continue
        assert den_key(execute(cell.rep, athletics_world)) == cell.key


def test_combo_dens_recompute(athletics_chart: Chart, athletics_world: World):
    """A combo's rule applied to its operand cells lands in its cell."""
    rules = athletics_chart.rules.composition_rules()
    checked = 0
    for cell in athletics_chart.cells:
        for rule_i, c1, c2 in cell.combos[:2]:
            rule = rules[rule_i]
            args = [athletics_chart.cells[c1]]
            if c2 >= 0:
                args.append(athletics_chart.cells[c2])
            den = rule.den(athletics_chart.world, *(a.operand() for a in args))
            assert den_key(den) == cell.key
            checked += 1
    assert checked > 100


def test_unreachable_answer(athletics_world: World):
    chart = first_pass(QUESTION, athletics_world, default_ruleset(), 3)
    finals = mark_backward(chart, target_from_answers(["Mars"]))
    assert finals == []
    z, truncated = second_pass(chart)
    assert z == [] and not truncated
    assert chart_stats(chart, 0, False).pass2_cells == 0


def test_size_zero_literal_is_not_a_parse(athletics_world: World):
    """An anchored literal equal to the answer is not itself a final."""
    chart = first_pass("was it 1st or 2nd", athletics_world, default_ruleset(), 2)
    finals = mark_backward(chart, target_from_answers(["1st"]))
    for i in finals:
        assert chart.cells[i].size >= 1


def test_cap_truncates(athletics_chart: Chart):
    z_full, _ = second_pass(athletics_chart)
    z, truncated = second_pass(athletics_chart, cap=10)
    assert truncated
    assert len(z) <= len(z_full)
    again, _ = second_pass(athletics_chart, cap=10)
    assert [f.canon for f in z] == [f.canon for f in again]


def test_rule_ablation_removes_forms(athletics_world: World):
    target = target_from_answers(["Thailand"])
    manifest = ruleset_manifest(default_ruleset())
    stripped = "\n".join(
        line for line in manifest.splitlines() if line != "rule C-agg-count"
    )
    rules = parse_ruleset(stripped)
    chart = first_pass(QUESTION, athletics_world, rules, 4)
    mark_backward(chart, target)
    z, _ = second_pass(chart)
    canons = {f.canon for f in z}
    assert canons == {c for c in Z4_CANONS if "(count " not in c}


def test_dump_chart_serializes(athletics_chart: Chart):
    dump = dump_chart(athletics_chart)
    text = json.dumps(dump)
    assert json.loads(text)["combos_total"] == 9038
    cell = dump["cells"][0]
    assert set(cell) == {
        "category",
        "size",
        "key",
        "representative",
        "base_forms",
        "combos",
        "marked",
    }
    assert sum(c["combos"] for c in dump["cells"]) == dump["combos_total"]


def test_invariance_all_rules(athletics_world: World):
    rs = default_ruleset()
    for rule in rs.composition_rules():
        report = check_invariance(rule, 60, athletics_world, rs, seed=11)
        assert report.ok, report.failures[0]


def test_invariance_catches_broken_rule(athletics_world: World):
    rs = default_ruleset()
    c1 = rs.rule("C1")
    broken = Rule(
        id="C1-broken",
        kind=c1.kind,
        arg_cats=c1.arg_cats,
        result_cat=c1.result_cat,
        build=c1.build,
        den=lambda world, s, r: SetD((Number(float(len(r.canon))),)),
    )
    report = check_invariance(broken, 400, athletics_world, rs, seed=3)
    assert not report.ok
    bad = report.failures[0]
    assert bad.rule_id == "C1-broken"
    assert bad.den_a != bad.den_b
