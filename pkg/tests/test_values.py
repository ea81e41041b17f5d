"""Value rendering, parsing, ordering, and comparison semantics."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from denotable.values import (
    Date,
    Entity,
    Number,
    Row,
    compare_dates,
    compare_values,
    format_number,
    normalize_entity,
    parse_value,
    render_value,
    value_sort_key,
)


def test_normalize_entity_folds_case_space_and_edge_punctuation():
    assert normalize_entity("  Héllo   WORLD!! ") == "héllo world"
    assert normalize_entity("U.S.A.") == "u.s.a"
    assert normalize_entity("***") == ""
    assert normalize_entity("1st") == "1st"


def test_format_number_drops_integral_suffix():
    assert format_number(3.0) == "3"
    assert format_number(-5.0) == "-5"
    assert format_number(3.5) == "3.5"
    assert format_number(0.0) == "0"


def test_render_examples():
    assert render_value(Row(3)) == "r3"
    assert render_value(Entity("1st")) == '"1st"'
    assert render_value(Number(2004.0)) == "2004"
    assert render_value(Date(2004, None, None)) == "2004-XX-XX"
    assert render_value(Date(None, 3, 4)) == "XX-03-04"


def test_parse_value_inverts_render():
    for v in [
        Row(0),
        Row(12),
        Entity("finland"),
        Entity('say "hi", ok?'),
        Entity(""),
        Number(3.0),
        Number(-2.5),
        Date(2004, 3, 4),
        Date(None, 3, 4),
        Date(2004, None, None),
    ]:
        assert parse_value(render_value(v)) == v


def test_renders_are_distinct_across_kinds():
    corpus = [Row(1), Entity("r1"), Entity("3"), Number(3.0), Number(1.0), Date(2004, None, None), Entity("2004-XX-XX")]
    renders = [render_value(v) for v in corpus]
    assert len(set(renders)) == len(renders)


def test_date_requires_one_known_component():
    with pytest.raises(ValueError):
        Date(None, None, None)


def test_compare_dates_cases():
    assert compare_dates(Date(2000, 12, 31), Date(2001, 1, 1)) == -1
    assert compare_dates(Date(2001, 3, None), Date(2001, 3, None)) == 0
    assert compare_dates(Date(None, 3, 4), Date(None, 3, 5)) == -1
    # one side unknown where the other is known: incomparable
    assert compare_dates(Date(2001, None, None), Date(2001, 3, None)) is None
    assert compare_dates(Date(None, 3, 4), Date(2001, 3, 4)) is None
    # an early decision wins before a later unknown can block
    assert compare_dates(Date(2000, 1, None), Date(2001, None, 5)) == -1


def test_compare_values_only_within_kind():
    assert compare_values(Number(3.0), Number(4.0)) == -1
    assert compare_values(Number(3.0), Date(2004, None, None)) is None
    assert compare_values(Entity("a"), Entity("a")) is None
    assert compare_values(Row(1), Row(1)) is None


def test_value_sort_key_total_and_stable():
    values = [Date(2004, 3, 4), Number(1.0), Entity("b"), Row(2), Entity("a"), Number(-1.0), Row(0), Date(None, 3, 4)]
    ordered = sorted(values, key=value_sort_key)
    assert ordered == [
        Row(0),
        Row(2),
        Entity("a"),
        Entity("b"),
        Number(-1.0),
        Number(1.0),
        Date(None, 3, 4),
        Date(2004, 3, 4),
    ]


_dates = st.tuples(
    st.one_of(st.none(), st.integers(1000, 2999)),
    st.one_of(st.none(), st.integers(1, 12)),
    st.one_of(st.none(), st.integers(1, 31)),
).filter(lambda c: any(x is not None for x in c)).map(lambda c: Date(*c))

_any_value = st.one_of(
    st.integers(0, 500).map(Row),
    st.text(max_size=12).map(Entity),
    st.floats(allow_nan=False, allow_infinity=False).map(Number),
    _dates,
)


@given(_any_value)
def test_render_parse_roundtrip(v):
    assert parse_value(render_value(v)) == v


@given(_dates, _dates)
def test_compare_dates_antisymmetric(a, b):
    ab = compare_dates(a, b)
    ba = compare_dates(b, a)
    if ab is None:
        assert ba is None
    else:
        assert ba == -ab
