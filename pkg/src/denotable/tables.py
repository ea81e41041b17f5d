"""Table ingestion and cell-content normalization.

A table is a header row plus rectangular rows of cell strings.  Column
names are normalized to unique identifiers so they can double as
relation names in logical forms; the original header text is kept for
display.  ``normalize_cell`` extracts the numeric, date, and list
interpretations that become normalization edges in the world graph.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field

from .values import Date

RESERVED_RELATIONS = ("Next", "Index", "Number", "Num2", "Date", "Part")


class TableError(ValueError):
    """Raised for malformed table input (ragged rows, empty header)."""


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    id: str = ""
    display_columns: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.display_columns:
            object.__setattr__(self, "display_columns", self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise TableError(f"ragged row {i}")

    def column(self, name: str) -> list[str]:
        j = self.columns.index(name)
        return [row[j] for row in self.rows]


def _identifier(name: str) -> str:
    ident = re.sub(r"[^0-9A-Za-z]+", "_", name.strip()).strip("_")
    if not ident:
        ident = "col"
    if ident[0].isdigit():
        ident = "_" + ident
    return ident


def normalize_columns(raw: list[str]) -> list[str]:
    """Identifier-ize headers; suffix duplicates and reserved relation names."""
    out: list[str] = []
    seen: set[str] = set(RESERVED_RELATIONS)
    for name in raw:
        ident = _identifier(name)
        candidate = ident
        n = 2
        while candidate in seen:
            candidate = f"{ident}_{n}"
            n += 1
        seen.add(candidate)
        out.append(candidate)
    return out


def make_table(columns: list[str], rows: list[list[str]], table_id: str = "") -> Table:
    return Table(
        columns=tuple(normalize_columns(columns)),
        rows=tuple(tuple(cell.strip() for cell in row) for row in rows),
        id=table_id,
        display_columns=tuple(name.strip() for name in columns),
    )


def parse_table(raw: str, format: str = "csv", table_id: str = "") -> Table:
    """Parse delimited text with a header row into a Table.

    The first record is the header; every later record must have the same
    cell count or the row is rejected by 1-based data-row number.
    """
    if format not in ("csv", "tsv"):
        raise TableError(f"unknown format {format!r}")
    delim = "," if format == "csv" else "\t"
    records = list(csv.reader(io.StringIO(raw), delimiter=delim))
    records = [rec for rec in records if rec != []]
    if not records:
        raise TableError("empty input")
    header = records[0]
    if not header or all(not h.strip() for h in header):
        raise TableError("empty header")
    width = len(header)
    rows = []
    for i, rec in enumerate(records[1:], start=1):
        if len(rec) != width:
            raise TableError(f"ragged row {i}")
        rows.append(rec)
    if not rows:
        raise TableError("no data rows")
    return make_table(header, rows, table_id=table_id)


_MONTHS = {
    name: i + 1
    for i, names in enumerate(
        [
            ("january", "jan"),
            ("february", "feb"),
            ("march", "mar"),
            ("april", "apr"),
            ("may",),
            ("june", "jun"),
            ("july", "jul"),
            ("august", "aug"),
            ("september", "sep", "sept"),
            ("october", "oct"),
            ("november", "nov"),
            ("december", "dec"),
        ]
    )
    for name in names
}

_MONTH_RE = "|".join(sorted(_MONTHS, key=len, reverse=True))

# Grouped first so "1,000" is read as one number, not two.
_NUMBER_RE = re.compile(r"(?<![\d.])-?\d{1,3}(?:,\d{3})+(?:\.\d+)?|(?<![\d.])-?\d+(?:\.\d+)?")
_GROUPED_FULL_RE = re.compile(r"-?\d{1,3}(?:,\d{3})+(?:\.\d+)?")

_PART_SPLIT_RE = re.compile(r"[,;\n]")


def _valid_md(month: int, day: int) -> bool:
    return 1 <= month <= 12 and 1 <= day <= 31


def parse_date(text: str) -> Date | None:
    """Full-string date interpretation, or None.

    Supported patterns, most specific first: YYYY-MM-DD, D Month YYYY,
    Month YYYY, D/M/YYYY, M-D, YYYY.  Unknown components stay unknown;
    bare years must fall in 1000..2999.
    """
    text = text.strip().lower()
    m = re.fullmatch(r"(\d{4})-(\d{1,2})-(\d{1,2})", text)
    if m and _valid_md(int(m.group(2)), int(m.group(3))):
        return Date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    m = re.fullmatch(rf"(\d{{1,2}})\s+({_MONTH_RE})\.?\s+(\d{{4}})", text)
    if m and 1 <= int(m.group(1)) <= 31:
        return Date(int(m.group(3)), _MONTHS[m.group(2)], int(m.group(1)))
    m = re.fullmatch(rf"({_MONTH_RE})\.?\s+(\d{{4}})", text)
    if m:
        return Date(int(m.group(2)), _MONTHS[m.group(1)], None)
    m = re.fullmatch(r"(\d{1,2})/(\d{1,2})/(\d{4})", text)
    if m and _valid_md(int(m.group(2)), int(m.group(1))):
        return Date(int(m.group(3)), int(m.group(2)), int(m.group(1)))
    m = re.fullmatch(r"(\d{1,2})-(\d{1,2})", text)
    if m and _valid_md(int(m.group(1)), int(m.group(2))):
        return Date(None, int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"(\d{4})", text)
    if m and 1000 <= int(m.group(1)) <= 2999:
        return Date(int(m.group(1)), None, None)
    return None


def parse_numbers(text: str) -> list[float]:
    return [float(m.group(0).replace(",", "")) for m in _NUMBER_RE.finditer(text)]


@dataclass(frozen=True)
class CellInterpretation:
    number: float | None
    num2: float | None
    date: Date | None
    parts: tuple[str, ...]


def normalize_cell(text: str) -> CellInterpretation:
    """Extract (first number, second number, date, list parts) from cell text.

    Total: absent interpretations are None/empty.  Commas split list
    parts unless the whole cell is a comma-grouped number.
    """
    numbers = parse_numbers(text)
    number = numbers[0] if numbers else None
    num2 = numbers[1] if len(numbers) > 1 else None
    date = parse_date(text)
    parts: tuple[str, ...] = ()
    if not _GROUPED_FULL_RE.fullmatch(text.strip()):
        pieces = [p.strip() for p in _PART_SPLIT_RE.split(text)]
        pieces = [p for p in pieces if p]
        if len(pieces) >= 2:
            parts = tuple(pieces)
    return CellInterpretation(number, num2, date, parts)
