"""Perturbed tables for probing which forms agree by accident.

Each generated table keeps the original's shape and per-column cell
pool: a column is resampled from its own cells, without replacement
when they were all distinct (a permutation) and with replacement
otherwise.  Columns that read as sorted stay sorted, and values the
question anchors are forced back in so the forms that mention them stay
executable.  World i depends only on (seed, i), so extending k leaves
earlier worlds unchanged.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
from dataclasses import dataclass
from typing import Sequence

from .tables import Table, make_table, normalize_cell
from .values import Date, Entity, Number, Value, normalize_entity, render_value, value_sort_key
from .world import World, anchor_entities, build_world


def _column_sort_keys(cells: Sequence[str]) -> tuple[str, bool] | None:
    """Key family and direction for a sorted column, else None.

    A column counts as sorted when every cell parses under a uniform
    date-else-numeric reading, it has at least two cells, and the keys
    run monotonically (either direction, ties allowed).  Dates win over
    numbers because date strings usually contain incidental digits.
    """
    interps = [normalize_cell(c) for c in cells]
    if len(cells) < 2:
        return None
    if all(i.date is not None for i in interps):
        family = "date"
    elif all(i.number is not None for i in interps):
        family = "number"
    else:
        return None
    keys = [_family_key(c, family) for c in cells]
    ascending = all(a <= b for a, b in zip(keys, keys[1:]))
    descending = all(a >= b for a, b in zip(keys, keys[1:]))
    if not (ascending or descending):
        return None
    return family, ascending


def _date_key(d: Date) -> tuple[int, int, int]:
    return (d.year or -1, d.month or -1, d.day or -1)


def _family_key(cell: str, family: str):
    interp = normalize_cell(cell)
    if family == "date":
        return _date_key(interp.date)
    return interp.number


def _cell_yields_value(cell: str, value: Value) -> bool:
    """Whether this cell string would put `value` into the world graph."""
    interp = normalize_cell(cell)
    if isinstance(value, Entity):
        if normalize_entity(cell) == value.text:
            return True
        return value.text in (normalize_entity(p) for p in interp.parts)
    if isinstance(value, Number):
        if interp.number is not None and interp.number == value.value:
            return True
        return interp.num2 is not None and interp.num2 == value.value
    if isinstance(value, Date):
        return interp.date == value
    return False


def _generate_column(
    pool: Sequence[str],
    required: Sequence[Sequence[str]],
    sort_info: tuple | None,
    rng: random.Random,
    name: str,
) -> list[str]:
    """Resample one column, forcing each required value group back in.

    Distinct pools are permuted, duplicated pools are drawn with
    replacement.  A group already present gets its first occurrence
    protected; an absent group overwrites a uniformly chosen free cell.
    """
    n = len(pool)
    distinct = len(set(pool)) == len(pool)
    if distinct:
        cells = list(pool)
        rng.shuffle(cells)
    else:
        cells = [rng.choice(list(pool)) for _ in range(n)]
    used: set[int] = set()
    for matches in required:
        present = next((p for p, c in enumerate(cells) if c in matches), None)
        if present is not None:
            used.add(present)
            continue
        free = [p for p in range(n) if p not in used]
        if not free:
            raise ValueError(
                f"column {name!r} cannot hold every anchored value: "
                f"no free cell for one of {list(matches)}"
            )
        pos = rng.choice(free)
        cells[pos] = rng.choice(list(matches))
        used.add(pos)
    if sort_info is not None:
        family, ascending = sort_info
        cells.sort(key=lambda c: _family_key(c, family), reverse=not ascending)
    return cells


@dataclass(frozen=True)
class WorldBatch:
    """Generated worlds plus the manifest describing the batch."""

    original: World
    worlds: tuple[World, ...]
    manifest: dict


def anchored_values(utterance: str, table: Table) -> list[Value]:
    world = build_world(table)
    values = {a.value for a in anchor_entities(utterance, world)}
    return sorted(values, key=value_sort_key)


def generate_worlds(table: Table, utterance: str, k: int, seed: int) -> WorldBatch:
    """k perturbed worlds of `table`, reproducible from `seed` alone."""
    if k <= 0:
        raise ValueError("k must be positive")
    anchors = anchored_values(utterance, table)
    n = len(table.rows)
    columns = [[row[j] for row in table.rows] for j in range(len(table.columns))]
    sorted_info = [_column_sort_keys(col) for col in columns]
    required: list[list[list[str]]] = []
    for j, col in enumerate(columns):
        per_value: list[list[str]] = []
        for value in anchors:
            matches = sorted({c for c in col if _cell_yields_value(c, value)})
            if matches:
                per_value.append(matches)
        required.append(per_value)

    worlds: list[World] = []
    entries: list[dict] = []
    for i in range(k):
        rng = random.Random(
            int.from_bytes(
                hashlib.sha256(f"{seed}:world:{i}".encode()).digest()[:8], "big"
            )
        )
        new_cols = [
            _generate_column(
                columns[j],
                required[j],
                sorted_info[j],
                rng,
                table.columns[j],
            )
            for j in range(len(columns))
        ]
        rows = [[new_cols[j][r] for j in range(len(columns))] for r in range(n)]
        digest = hashlib.sha256(
            "\x1f".join(["\x1e".join(table.display_columns)] + ["\x1e".join(r) for r in rows]).encode()
        ).hexdigest()[:16]
        t = make_table(list(table.display_columns), rows, table_id=f"w{digest}")
        world = build_world(t)
        worlds.append(world)
        coverage = {
            render_value(v): any(
                _cell_yields_value(cell, v) for row in t.rows for cell in row
            )
            for v in anchors
        }
        entries.append({"index": i, "world": world.id, "coverage": coverage})

    manifest = {
        "seed": seed,
        "k": k,
        "anchored_values": [render_value(v) for v in anchors],
        "sorted_columns": [
            table.columns[j] for j, info in enumerate(sorted_info) if info is not None
        ],
        "worlds": entries,
    }
    return WorldBatch(original=build_world(table), worlds=tuple(worlds), manifest=manifest)


def manifest_text(batch: WorldBatch) -> str:
    return json.dumps(batch.manifest, sort_keys=True, indent=2) + "\n"


def world_tsv(world: World) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    writer.writerow(world.table.display_columns)
    for row in world.table.rows:
        writer.writerow(row)
    return buf.getvalue()


def write_batch(batch: WorldBatch, out_dir) -> list[str]:
    """Persist TSV tables plus manifest; returns the file names written."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i, world in enumerate(batch.worlds):
        name = f"world-{i:04d}.tsv"
        _atomic_write(out / name, world_tsv(world))
        names.append(name)
    _atomic_write(out / "manifest.json", manifest_text(batch))
    names.append("manifest.json")
    return names


def _atomic_write(path, text: str) -> None:
    from pathlib import Path

    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
