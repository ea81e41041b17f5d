"""Shared fixtures: the four-row athletics table used across the suite."""

from __future__ import annotations

import pytest

from denotable.tables import Table, make_table
from denotable.world import World, build_world

ATHLETICS_COLUMNS = ["Year", "Venue", "Position", "Event"]
ATHLETICS_ROWS = [
    ["2001", "Hungary", "2nd", "400m"],
    ["2002", "Finland", "1st", "400m"],
    ["2003", "Germany", "11th", "400m"],
    ["2004", "Thailand", "1st", "Relay"],
]


@pytest.fixture(scope="session")
def athletics_table() -> Table:
    return make_table(ATHLETICS_COLUMNS, ATHLETICS_ROWS, table_id="athletics")


@pytest.fixture(scope="session")
def athletics_world(athletics_table: Table) -> World:
    return build_world(athletics_table)
