"""Logical-form ASTs: construction, sizes, canonical text, and parsing.

Nodes are hash-consed: structurally equal forms are the same object, so
identity comparison and id-keyed caches are safe and fast.  The canonical
text is an s-expression grammar (documented in docs/logical-forms.md)
with commutative arguments sorted, so equal forms serialize identically.

Sizes mirror derivation arithmetic: base forms (entities, the all-rows
set, bare relations) cost 0 and every composition adds 1.
"""

from __future__ import annotations

import re
from typing import Iterator

from .tables import RESERVED_RELATIONS
from .values import Date, Entity, Number, Row, Value, format_number, parse_value, render_value

COMPARE_OPS = ("<", ">", "<=", ">=", "!=")
_FLIP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "!=": "!="}

AGG_OPS = ("count", "max", "min", "sum")
SUP_OPS = ("argmax", "argmin")


class Form:
    """Base node; construct only through the factory functions below."""

    __slots__ = ("uid", "size", "canon", "has_var")

    uid: int
    size: int
    canon: str
    has_var: bool

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"<{type(self).__name__} {self.canon}>"


class Var(Form):
    __slots__ = ()


class EntitySet(Form):
    __slots__ = ("value",)
    value: Value


class AllRows(Form):
    __slots__ = ()


class Rel(Form):
    """A relation: a column, a builtin edge label, or a comparison.

    ``reversed_`` flips edge direction; double reversal and reversal of a
    comparison are normalized away at construction.
    """

    __slots__ = ("kind", "name", "reversed_")
    kind: str  # "column" | "builtin" | "compare"
    name: str
    reversed_: bool


class Join(Form):
    __slots__ = ("rel", "arg")
    rel: Rel
    arg: Form


class Intersect(Form):
    __slots__ = ("left", "right")
    left: Form
    right: Form


class UnionEnt(Form):
    __slots__ = ("left", "right")
    left: EntitySet
    right: EntitySet


class Aggregate(Form):
    __slots__ = ("op", "arg")
    op: str
    arg: Form


class Sub(Form):
    __slots__ = ("left", "right")
    left: Form
    right: Form


class MapForm(Form):
    __slots__ = ("unary", "chain")
    unary: Form
    chain: Form


class Superlative(Form):
    __slots__ = ("op", "map")
    op: str
    map: MapForm


_intern: dict[tuple, Form] = {}
_next_uid = 0


def _make(cls, key: tuple, canon: str, size: int, has_var: bool, **fields) -> Form:
    global _next_uid
    node = _intern.get(key)
    if node is not None:
        return node
    node = cls.__new__(cls)
    node.uid = _next_uid
    _next_uid += 1
    node.canon = canon
    node.size = size
    node.has_var = has_var
    for slot, val in fields.items():
        setattr(node, slot, val)
    _intern[key] = node
    return node


def var() -> Var:
    return _make(Var, ("x",), "x", 0, True)


def entity_set(value: Value) -> EntitySet:
    head = {Entity: "entity", Number: "number", Date: "date", Row: "row"}[type(value)]
    payload = render_value(value) if not isinstance(value, Row) else str(value.index)
    canon = f"({head} {payload})"
    return _make(EntitySet, ("ent", value), canon, 0, False, value=value)


def all_rows() -> AllRows:
    return _make(AllRows, ("rows",), "(rows)", 0, False)


def _rel(kind: str, name: str, reversed_: bool) -> Rel:
    body = name if kind != "compare" else name
    canon = f"(reverse {body})" if reversed_ else body
    return _make(Rel, ("rel", kind, name, reversed_), canon, 0, False, kind=kind, name=name, reversed_=reversed_)


def column(name: str) -> Rel:
    return _rel("column", name, False)


def builtin(name: str) -> Rel:
    if name not in RESERVED_RELATIONS:
        raise ValueError(f"not a builtin relation: {name}")
    return _rel("builtin", name, False)


def compare(op: str) -> Rel:
    if op not in COMPARE_OPS:
        raise ValueError(f"unknown comparison {op!r}")
    return _rel("compare", op, False)


def reverse(rel: Rel) -> Rel:
    if rel.kind == "compare":
        return _rel("compare", _FLIP[rel.name], False)
    return _rel(rel.kind, rel.name, not rel.reversed_)


def join(rel: Rel, arg: Form) -> Join:
    canon = f"(join {rel.canon} {arg.canon})"
    return _make(
        Join, ("join", rel.uid, arg.uid), canon, rel.size + arg.size + 1, arg.has_var, rel=rel, arg=arg
    )


def intersect(a: Form, b: Form) -> Intersect:
    if a.has_var and b.has_var:
        raise ValueError("intersection of two open chains")
    if b.has_var:
        a, b = b, a
    if not a.has_var and b.canon < a.canon:
        a, b = b, a
    canon = f"(and {a.canon} {b.canon})"
    return _make(
        Intersect,
        ("and", a.uid, b.uid),
        canon,
        a.size + b.size + 1,
        a.has_var,
        left=a,
        right=b,
    )


def union_entities(a: Form, b: Form) -> UnionEnt:
    if not isinstance(a, EntitySet) or not isinstance(b, EntitySet):
        raise ValueError("union arguments must be entity literals")
    if b.canon < a.canon:
        a, b = b, a
    canon = f"(or {a.canon} {b.canon})"
    return _make(UnionEnt, ("or", a.uid, b.uid), canon, a.size + b.size + 1, False, left=a, right=b)


def aggregate(op: str, arg: Form) -> Aggregate:
    if op not in AGG_OPS:
        raise ValueError(f"unknown aggregate {op!r}")
    if arg.has_var and op != "count":
        raise ValueError("only count may extend a chain")
    canon = f"({op} {arg.canon})"
    return _make(Aggregate, (op, arg.uid), canon, arg.size + 1, arg.has_var, op=op, arg=arg)


def subtract(a: Form, b: Form) -> Sub:
    if a.has_var or b.has_var:
        raise ValueError("subtraction arguments must be closed")
    canon = f"(sub {a.canon} {b.canon})"
    return _make(Sub, ("sub", a.uid, b.uid), canon, a.size + b.size + 1, False, left=a, right=b)


def is_chain(f: Form) -> bool:
    """A chain applies joins/intersections/count around a single variable."""
    if isinstance(f, Var):
        return True
    if isinstance(f, Join):
        return is_chain(f.arg)
    if isinstance(f, Intersect):
        return is_chain(f.left) and not f.right.has_var
    if isinstance(f, Aggregate):
        return f.op == "count" and is_chain(f.arg)
    return False


def map_form(unary: Form, chain: Form) -> MapForm:
    if unary.has_var:
        raise ValueError("map unary must be closed")
    if not (chain.has_var and is_chain(chain)):
        raise ValueError("map binary must be a chain over x")
    canon = f"(map {unary.canon} {chain.canon})"
    return _make(
        MapForm,
        ("map", unary.uid, chain.uid),
        canon,
        unary.size + chain.size + 1,
        False,
        unary=unary,
        chain=chain,
    )


def superlative(op: str, m: MapForm) -> Superlative:
    if op not in SUP_OPS:
        raise ValueError(f"unknown superlative {op!r}")
    if not isinstance(m, MapForm):
        raise ValueError("superlative needs a map argument")
    canon = f"({op} {m.canon})"
    return _make(Superlative, (op, m.uid), canon, m.size + 1, False, op=op, map=m)


def canonical(f: Form) -> str:
    return f.canon


def form_size(f: Form) -> int:
    return f.size


CATEGORY_SET = "Set"
CATEGORY_REL = "Rel"
CATEGORY_MAP = "Map"


def category_of(f: Form) -> str:
    if isinstance(f, Rel):
        return CATEGORY_REL
    if isinstance(f, MapForm):
        return CATEGORY_MAP
    return CATEGORY_SET


def subforms(f: Form) -> Iterator[Form]:
    """Pre-order traversal of the node and all descendants."""
    yield f
    if isinstance(f, Join):
        yield from subforms(f.rel)
        yield from subforms(f.arg)
    elif isinstance(f, (Intersect, UnionEnt, Sub)):
        yield from subforms(f.left)
        yield from subforms(f.right)
    elif isinstance(f, Aggregate):
        yield from subforms(f.arg)
    elif isinstance(f, MapForm):
        yield from subforms(f.unary)
        yield from subforms(f.chain)
    elif isinstance(f, Superlative):
        yield from subforms(f.map)


class FormParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN_RE = re.compile(r'\s*([()]|"(?:[^"\\]|\\.)*"|[^\s()"]+)')


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].strip()
            if not stripped:
                break
            raise FormParseError(f"bad token {stripped[:10]!r}", pos)
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_DATE_ATOM_RE = re.compile(r"(XX|\d{4})-(XX|\d{2})-(XX|\d{2})")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def _peek(self) -> tuple[str, int]:
        if self.i >= len(self.tokens):
            raise FormParseError("unexpected end of input", len(self.text))
        return self.tokens[self.i]

    def _next(self) -> tuple[str, int]:
        tok = self._peek()
        self.i += 1
        return tok

    def _expect(self, want: str) -> None:
        tok, pos = self._next()
        if tok != want:
            raise FormParseError(f"expected {want!r}, got {tok!r}", pos)

    def parse(self) -> Form:
        form = self.parse_expr()
        if self.i != len(self.tokens):
            tok, pos = self.tokens[self.i]
            raise FormParseError(f"trailing input {tok!r}", pos)
        return form

    def parse_expr(self) -> Form:
        tok, pos = self._peek()
        if tok == "(":
            return self._parse_list()
        self._next()
        return self._parse_atom(tok, pos)

    def _parse_atom(self, tok: str, pos: int) -> Form:
        if tok == "x":
            return var()
        return self._rel_atom(tok, pos)

    def _rel_atom(self, tok: str, pos: int) -> Rel:
        if tok in COMPARE_OPS:
            return compare(tok)
        if tok in RESERVED_RELATIONS:
            return builtin(tok)
        if _IDENT_RE.fullmatch(tok):
            return column(tok)
        raise FormParseError(f"expected a relation, got {tok!r}", pos)

    def parse_rel(self) -> Rel:
        tok, pos = self._peek()
        if tok == "(":
            self._next()
            head, hpos = self._next()
            if head != "reverse":
                raise FormParseError(f"expected reverse, got {head!r}", hpos)
            inner = self.parse_rel()
            self._expect(")")
            return reverse(inner)
        self._next()
        return self._rel_atom(tok, pos)

    def _parse_list(self) -> Form:
        self._expect("(")
        head, hpos = self._next()
        if head == "entity":
            tok, pos = self._next()
            if not tok.startswith('"'):
                raise FormParseError("expected quoted entity", pos)
            result: Form = entity_set(parse_value(tok))
        elif head == "number":
            tok, pos = self._next()
            try:
                result = entity_set(Number(float(tok)))
            except ValueError:
                raise FormParseError(f"bad number {tok!r}", pos) from None
        elif head == "date":
            tok, pos = self._next()
            if not _DATE_ATOM_RE.fullmatch(tok):
                raise FormParseError(f"bad date {tok!r}", pos)
            result = entity_set(parse_value(tok))
        elif head == "row":
            tok, pos = self._next()
            if not tok.isdigit():
                raise FormParseError(f"bad row index {tok!r}", pos)
            result = entity_set(Row(int(tok)))
        elif head == "rows":
            result = all_rows()
        elif head == "join":
            rel = self.parse_rel()
            arg = self.parse_expr()
            result = join(rel, arg)
        elif head == "and":
            a = self.parse_expr()
            b = self.parse_expr()
            try:
                result = intersect(a, b)
            except ValueError as e:
                raise FormParseError(str(e), hpos) from None
        elif head == "or":
            a = self.parse_expr()
            b = self.parse_expr()
            try:
                result = union_entities(a, b)
            except ValueError as e:
                raise FormParseError(str(e), hpos) from None
        elif head in AGG_OPS:
            arg = self.parse_expr()
            try:
                result = aggregate(head, arg)
            except ValueError as e:
                raise FormParseError(str(e), hpos) from None
        elif head in SUP_OPS:
            m = self.parse_expr()
            if not isinstance(m, MapForm):
                raise FormParseError(f"{head} needs a map argument", hpos)
            result = superlative(head, m)
        elif head == "sub":
            a = self.parse_expr()
            b = self.parse_expr()
            try:
                result = subtract(a, b)
            except ValueError as e:
                raise FormParseError(str(e), hpos) from None
        elif head == "map":
            u = self.parse_expr()
            chain = self.parse_expr()
            try:
                result = map_form(u, chain)
            except ValueError as e:
                raise FormParseError(str(e), hpos) from None
        elif head == "reverse":
            inner = self.parse_rel()
            self._expect(")")
            return reverse(inner)
        else:
            raise FormParseError(f"unknown form head {head!r}", hpos)
        self._expect(")")
        return result


def parse_form(text: str) -> Form:
    """Parse canonical text back into a (hash-consed) form."""
    return _Parser(text).parse()
