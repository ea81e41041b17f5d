"""Execution semantics: frozen goldens plus a naive reference executor."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from denotable.denotations import ErrorD, MapD, RelD, SetD, den_key, den_to_json
from denotable.executor import execute, execute_all
from denotable.forms import Rel, parse_form
from denotable.tables import make_table
from denotable.values import Entity, Number, Row
from denotable.world import build_world
from naive_executor import naive_execute

from test_forms import _any_form


def run(text, world):
    return execute(parse_form(text), world)


def test_join_golden(athletics_world):
    d = run('(join Position (entity "1st"))', athletics_world)
    assert d == SetD({Row(1), Row(3)})
    assert den_to_json(d) == {"kind": "set", "values": ["r1", "r3"]}


def test_identity_map_golden(athletics_world):
    d = run('(map (join Position (entity "1st")) x)', athletics_world)
    assert d == MapD({Row(1), Row(3)}, {Row(1): frozenset({Row(1)}), Row(3): frozenset({Row(3)})})


def test_index_map_golden(athletics_world):
    d = run('(map (join Position (entity "1st")) (join (reverse Index) x))', athletics_world)
    assert d == MapD(
        {Row(1), Row(3)},
        {Row(1): frozenset({Number(1.0)}), Row(3): frozenset({Number(3.0)})},
    )


def test_superlative_golden(athletics_world):
    argmax = run('(argmax (map (join Position (entity "1st")) (join (reverse Index) x)))', athletics_world)
    argmin = run('(argmin (map (join Event (entity "relay")) (join (reverse Index) x)))', athletics_world)
    assert argmax == SetD({Row(3)})
    assert argmin == SetD({Row(3)})


def test_final_answer_golden(athletics_world):
    d = run(
        '(join (reverse Venue) (argmax (map (join Position (entity "1st")) (join (reverse Index) x))))',
        athletics_world,
    )
    assert d == SetD({Entity("thailand")})


def test_comparison_join(athletics_world):
    d = run("(join Number (join > (number 2001)))", athletics_world)
    assert d == SetD({Entity("2002"), Entity("2003"), Entity("2004")})


def test_not_equal_join(athletics_world):
    d = run('(join Venue (join != (entity "finland")))', athletics_world)
    assert d == SetD({Row(0), Row(2), Row(3)})


def test_count_and_sub(athletics_world):
    assert run("(count (rows))", athletics_world) == SetD({Number(4.0)})
    assert run("(count (join Venue (entity \"nowhere\")))", athletics_world) == SetD({Number(0.0)})
    d = run('(sub (count (rows)) (count (join Position (entity "1st"))))', athletics_world)
    assert d == SetD({Number(2.0)})


def test_aggregate_errors(athletics_world):
    assert run("(max (join (reverse Venue) (rows)))", athletics_world) == ErrorD("type")
    assert run('(max (join Venue (entity "nowhere")))', athletics_world) == ErrorD("empty")
    assert run("(sub (rows) (count (rows)))", athletics_world) == ErrorD("nonsingleton")
    assert run('(join Wrong (entity "1st"))', athletics_world) == ErrorD("unknown-relation")


def test_errors_absorb(athletics_world):
    d = run('(count (join Venue (join Wrong (entity "a"))))', athletics_world)
    assert d == ErrorD("unknown-relation")
    d = run('(and (rows) (max (rows)))', athletics_world)
    assert d == ErrorD("type")


def test_rel_extension(athletics_world):
    d = run("(reverse Next)", athletics_world)
    assert d == RelD({(Row(1), Row(0)), (Row(2), Row(1)), (Row(3), Row(2))})
    with pytest.raises(ValueError):
        run("<", athletics_world)


def test_open_chain_rejected(athletics_world):
    with pytest.raises(ValueError):
        run("(join Venue x)", athletics_world)


def test_execute_all_matches_single(athletics_world):
    forms = [
        parse_form('(join Position (entity "1st"))'),
        parse_form('(count (join Position (entity "1st")))'),
        parse_form('(join (reverse Venue) (join Position (entity "1st")))'),
    ]
    batch = execute_all(forms, athletics_world)
    assert [den_key(d) for d in batch] == [den_key(execute(f, athletics_world)) for f in forms]


MESSY = make_table(
    ["Date", "Score", "Hosts"],
    [
        ["4 March 2004", "3-4", "Helsinki, Finland"],
        ["2004", "1,000", "Oslo"],
        ["March 2005", "3-4", "Helsinki, Finland"],
        ["7/3/2004", "-5", "Lukas Bauer"],
    ],
    table_id="messy",
)

ORACLE_FORMS = [
    "(rows)",
    '(join Hosts (entity "oslo"))',
    '(join (reverse Hosts) (rows))',
    '(join Score (join Number (number 3)))',
    '(join Score (join Num2 (number 4)))',
    '(join Hosts (join Part (entity "finland")))',
    '(join Date_2 (join Date (date 2004-03-04)))',
    '(join Date_2 (join Date (date 2004-XX-XX)))',
    "(count (join Score (join Number (number 3))))",
    "(max (join Number (join (reverse Score) (rows))))",
    "(min (join Number (join (reverse Score) (rows))))",
    "(sum (join Number (join (reverse Score) (rows))))",
    "(max (join Date (join (reverse Date_2) (rows))))",
    '(argmax (map (rows) (join (reverse Index) x)))',
    '(argmin (map (rows) (join Next x)))',
    '(argmax (map (rows) (count (join Hosts (join (reverse Hosts) x)))))',
    '(and (join Hosts (entity "oslo")) (join Score (join Number (number 1000))))',
    '(or (entity "oslo") (entity "lukas bauer"))',
    "(sub (max (join Number (join (reverse Score) (rows)))) (min (join Number (join (reverse Score) (rows)))))",
    "(join Number (join >= (number 3)))",
    "(join Date (join < (date 2004-06-XX)))",
    '(join Score (join != (entity "3-4")))',
    '(map (join Hosts (join Part (entity "helsinki"))) (join (reverse Score) x))',
    '(map (rows) (count (join (reverse Hosts) x)))',
    "Next",
    "(reverse Hosts)",
]

MESSY_WORLD = build_world(MESSY)


@pytest.mark.parametrize("text", ORACLE_FORMS)
def test_matches_naive_executor_on_messy_table(text):
    form = parse_form(text)
    assert den_key(execute(form, MESSY_WORLD)) == den_key(naive_execute(form, MESSY))


@settings(max_examples=400, deadline=None)
@given(_any_form)
def test_random_forms_match_naive_executor(athletics_table, athletics_world, form):
    if form.has_var or (isinstance(form, Rel) and form.kind == "compare"):
        return
    assert den_key(execute(form, athletics_world)) == den_key(naive_execute(form, athletics_table))
