"""Reading and writing ISO 10303-21 (STEP Part 21) exchange files.

Only the subset of Part 21 written by IFC exporters is accepted: a single
DATA section of simple entity instances. Attribute values map onto Python
objects as follows::

    $            NULL
    *            DERIVED
    123          int
    1.5E3        float
    'text'       Text (raw contents, escapes untouched)
    .NAME.       Enumeration
    "0FF"        Binary
    #12          Ref
    (a,b)        tuple
    IFCLABEL(x)  Typed
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Union

__all__ = [
    "NULL",
    "DERIVED",
    "Text",
    "Enumeration",
    "Binary",
    "Ref",
    "Typed",
    "EntityInstance",
    "RawFile",
    "WriterOptions",
    "StepError",
    "StepSyntaxError",
    "DuplicateIdError",
    "parse",
    "format_real",
    "render_value",
    "canonical_row",
    "write_file",
    "iter_refs",
    "transform_refs",
    "render_attributes",
    "HEADER_KEYWORDS",
]

HEADER_KEYWORDS = ("FILE_DESCRIPTION", "FILE_NAME", "FILE_SCHEMA")


class StepError(ValueError):
    """Base class for malformed or unsupported exchange files."""


class StepSyntaxError(StepError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


class DuplicateIdError(StepError):
    def __init__(self, instance_id: int, line: int = 0):
        self.instance_id = instance_id
        self.line = line
        suffix = f" (line {line})" if line else ""
        super().__init__(f"duplicate instance name #{instance_id}{suffix}")


class _Singleton:
    __slots__ = ("_token",)

    def __init__(self, token: str):
        self._token = token

    def __repr__(self) -> str:
        return self._token

    def __reduce__(self):
        return (_singleton, (self._token,))


def _singleton(token: str) -> "_Singleton":
    return NULL if token == "$" else DERIVED


NULL = _Singleton("$")
DERIVED = _Singleton("*")


@dataclass(frozen=True, slots=True)
class Text:
    raw: str  # between the quotes, '' and \X2\ escapes kept as written


@dataclass(frozen=True, slots=True)
class Enumeration:
    name: str


@dataclass(frozen=True, slots=True)
class Binary:
    payload: str


@dataclass(frozen=True, slots=True)
class Ref:
    id: int


@dataclass(frozen=True, slots=True)
class Typed:
    keyword: str
    value: "AttributeValue"


AttributeValue = Union[_Singleton, int, float, Text, Enumeration, Binary, Ref, tuple, Typed]


@dataclass(frozen=True, slots=True)
class EntityInstance:
    id: int
    type_name: str
    attributes: tuple

    def replace(self, **changes) -> "EntityInstance":
        return EntityInstance(
            changes.get("id", self.id),
            changes.get("type_name", self.type_name),
            changes.get("attributes", self.attributes),
        )


@dataclass
class RawFile:
    header_records: list  # [(keyword, raw argument text)]
    data_rows: list  # [EntityInstance] in file order
    schema_name: str = ""

    def by_id(self) -> dict:
        return {row.id: row for row in self.data_rows}


@dataclass(frozen=True)
class WriterOptions:
    strip_header_timestamp: bool = False


# --------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"""
    (?:\s+|/\*.*?\*/)*
    (?:
      (?P<ref>\#[0-9]+)
    | (?P<str>'(?:[^']|'')*')
    | (?P<enum>\.[A-Za-z_][A-Za-z0-9_]*\.)
    | (?P<real>[+-]?(?:[0-9]+\.[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?|[+-]?[0-9]+[eE][+-]?[0-9]+)
    | (?P<int>[+-]?[0-9]+)
    | (?P<kw>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<bin>"[0-9A-Fa-f]*")
    | (?P<p>[(),;=$*])
    | (?P<end>\s*\Z)
    | (?P<bad>.)
    )
    """,
    re.S | re.X | re.A,
)
_PREAMBLE = re.compile(r"(?:\s+|/\*.*?\*/)*ISO-10303-21\s*;", re.S | re.A)
_POSTAMBLE = re.compile(r"(?:\s+|/\*.*?\*/)*END-ISO-10303-21\s*;(?:\s+|/\*.*?\*/)*\Z", re.S | re.A)
# a whole row without comments; the parameter list is matched with the
# unrolled "normal* (special normal*)*" form so failures stay linear
_ROW = re.compile(
    r"""\s*\#([0-9]+)\s*=\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(([^;'/]*(?:(?:'[^']*'|/(?!\*))[^;'/]*)*)\)\s*;""",
    re.A,
)


_ARG_TOKEN = re.compile(r"""'[^']*(?:''[^']*)*'|"[^"]*"|[^\s,()'"$*]+|[(),$*]|\S""", re.A)
_INT_TEXT = re.compile(r"[+-]?[0-9]+\Z")
_REAL_TEXT = re.compile(r"(?:[+-]?(?:[0-9]+\.[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?|[+-]?[0-9]+[eE][+-]?[0-9]+)\Z")
_ENUM_TEXT = re.compile(r"\.[A-Za-z_][A-Za-z0-9_]*\.\Z")
_KEYWORD_TEXT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_BINARY_TEXT = re.compile(r'"[0-9A-Fa-f]*"\Z')


def _fast_arguments(args: str):
    """Values of a comment-free parameter list (without its outer parentheses).

    Returns ``None`` for anything the token machine should look at, so the
    result is either identical to the slow path or absent.
    """
    stack: list = []
    items: list = []
    keyword = None
    pending = None  # keyword waiting for its '('
    want_value = True
    just_opened = True
    for tok in _ARG_TOKEN.findall(args):
        c = tok[0]
        if pending is not None and c != "(":
            return None
        if c == ",":
            if want_value:
                return None
            want_value = True
            just_opened = False
            continue
        if c == ")":
            if (want_value and not just_opened) or not stack:
                return None
            if keyword is not None:
                if len(items) != 1:
                    return None
                value = Typed(keyword, items[0])
            else:
                value = tuple(items)
            items, keyword = stack.pop()
            items.append(value)
            want_value = False
            just_opened = False
            continue
        if not want_value:
            return None
        if c == "(":
            stack.append((items, keyword))
            items, keyword, pending = [], pending, None
            just_opened = True
            continue
        if c == "#":
            if not tok[1:].isdecimal():
                return None
            items.append(Ref(int(tok[1:])))
        elif c == "'":
            if len(tok) < 2:
                return None
            items.append(Text(tok[1:-1]))
        elif c == "$":
            items.append(NULL)
        elif c in "0123456789+-.":
            if _INT_TEXT.match(tok):
                items.append(int(tok))
            elif _REAL_TEXT.match(tok):
                items.append(float(tok))
            elif _ENUM_TEXT.match(tok):
                items.append(Enumeration(tok[1:-1].upper()))
            else:
                return None
        elif c == "*":
            items.append(DERIVED)
        elif c == '"':
            if not _BINARY_TEXT.match(tok):
                return None
            items.append(Binary(tok[1:-1].upper()))
        elif _KEYWORD_TEXT.match(tok):
            pending = tok.upper()
            continue
        else:
            return None
        want_value = False
        just_opened = False
    if stack or pending is not None or (want_value and not just_opened):
        return None
    return tuple(items)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self._tokens = None

    # -- position helpers

    def where(self, offset: int) -> tuple[int, int]:
        line = self.text.count("\n", 0, offset) + 1
        column = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        return line, column

    def error(self, message: str, offset: int) -> StepSyntaxError:
        return StepSyntaxError(message, *self.where(offset))

    def start_tokens(self, pos: int) -> None:
        self._tokens = _TOKEN.finditer(self.text, pos).__next__

    def next(self):
        m = self._tokens()
        kind = m.lastgroup
        if kind == "bad":
            offset = m.start("bad")
            ch = m.group("bad")
            if ch == "'":
                raise self.error("unterminated string", offset)
            if ch in "@&":
                raise self.error("external and constant references are not supported", offset)
            raise self.error(f"unexpected character {ch!r}", offset)
        return m, kind

    def expect(self, punct: str):
        m, kind = self.next()
        if kind != "p" or m.group("p") != punct:
            raise self.error(f"expected {punct!r}", m.start(kind))
        return m

    def expect_keyword(self, *keywords: str):
        m, kind = self.next()
        if kind != "kw" or m.group("kw").upper() not in keywords:
            raise self.error("expected " + " or ".join(keywords), m.start(kind))
        return m.group("kw").upper()

    # -- attribute lists

    def parse_arguments(self) -> tuple[tuple, int]:
        """Parse the parameter list after an opening '('.

        Returns the values and the offset of the closing ')'.
        """
        nxt = self.next
        stack: list = []
        items: list = []
        keyword = None
        want_value = True  # directly after '(' or ','
        just_opened = True
        while True:
            m, kind = nxt()
            if kind == "p":
                p = m.group("p")
                if p == ",":
                    if want_value:
                        raise self.error("missing parameter before ','", m.start("p"))
                    want_value = True
                    just_opened = False
                    continue
                if p == ")":
                    if want_value and not just_opened:
                        raise self.error("missing parameter before ')'", m.start("p"))
                    if keyword is not None:
                        if len(items) != 1:
                            raise self.error(f"typed parameter {keyword} needs exactly one value", m.start("p"))
                        value = Typed(keyword, items[0])
                    else:
                        value = tuple(items)
                    if not stack:
                        if keyword is not None:
                            raise self.error("unexpected ')'", m.start("p"))
                        return value, m.start("p")
                    items, keyword = stack.pop()
                    items.append(value)
                    want_value = False
                    just_opened = False
                    continue
                if not want_value:
                    raise self.error(f"expected ',' or ')' before {p!r}", m.start("p"))
                if p == "(":
                    stack.append((items, keyword))
                    items, keyword = [], None
                    just_opened = True
                    continue
                if p == "$":
                    items.append(NULL)
                elif p == "*":
                    items.append(DERIVED)
                else:
                    raise self.error(f"unexpected {p!r} in parameter list", m.start("p"))
            else:
                if not want_value:
                    raise self.error("expected ',' or ')'", m.start(kind))
                if kind == "ref":
                    items.append(Ref(int(m.group("ref")[1:])))
                elif kind == "real":
                    items.append(float(m.group("real")))
                elif kind == "str":
                    items.append(Text(m.group("str")[1:-1]))
                elif kind == "int":
                    items.append(int(m.group("int")))
                elif kind == "enum":
                    items.append(Enumeration(m.group("enum")[1:-1].upper()))
                elif kind == "kw":
                    self.expect("(")
                    stack.append((items, keyword))
                    items, keyword = [], m.group("kw").upper()
                    want_value = True
                    just_opened = True
                    continue
                elif kind == "bin":
                    items.append(Binary(m.group("bin")[1:-1].upper()))
                elif kind == "end":
                    raise self.error("unexpected end of file inside parameter list", m.start("end"))
                else:  # pragma: no cover - exhaustive over token kinds
                    raise self.error("unexpected token", m.start(kind))
            want_value = False
            just_opened = False

    # -- sections

    def parse(self) -> RawFile:
        pre = _PREAMBLE.match(self.text)
        if pre is None:
            raise self.error("missing 'ISO-10303-21;'", 0)
        self.start_tokens(pre.end())
        self.expect_keyword("HEADER")
        self.expect(";")
        header = self.parse_header()

        m, kind = self.next()
        if kind != "kw" or m.group("kw").upper() != "DATA":
            if kind == "kw" and m.group("kw").upper() in ("ANCHOR", "REFERENCE", "SIGNATURE"):
                raise self.error(f"{m.group('kw').upper()} section is not supported", m.start(kind))
            raise StepSyntaxError("missing DATA section", *self.where(m.start(kind)))
        m, kind = self.next()
        if kind != "p" or m.group("p") != ";":
            raise self.error("parameterised DATA sections are not supported", m.start(kind))
        self.pos = m.end()
        rows = self.parse_data()

        tail = _POSTAMBLE.match(self.text, self.pos)
        if tail is None:
            probe = _TOKEN.match(self.text, self.pos)
            kind = probe.lastgroup
            if kind == "kw" and probe.group("kw").upper() == "DATA":
                raise self.error("multiple DATA sections are not supported", probe.start(kind))
            raise self.error("expected 'END-ISO-10303-21;'", probe.start(kind))

        schema = ""
        for keyword, args in header:
            if keyword == "FILE_SCHEMA":
                found = re.search(r"'((?:[^']|'')*)'", args)
                schema = found.group(1) if found else ""
        return RawFile(header, rows, schema)

    def parse_header(self) -> list:
        records = []
        while True:
            m, kind = self.next()
            if kind == "kw" and m.group("kw").upper() == "ENDSEC":
                self.expect(";")
                break
            if kind != "kw":
                raise self.error("expected header entity", m.start(kind))
            keyword = m.group("kw").upper()
            open_paren = self.expect("(")
            _, close = self.parse_arguments()
            self.expect(";")
            records.append((keyword, self.text[open_paren.end("p"):close]))
        keywords = tuple(k for k, _ in records)
        if keywords != HEADER_KEYWORDS:
            raise StepSyntaxError(
                "header must contain exactly FILE_DESCRIPTION, FILE_NAME, FILE_SCHEMA "
                f"in that order, found {', '.join(keywords) or 'nothing'}"
            )
        return records

    def parse_data(self) -> list:
        """Rows up to and including ``ENDSEC;``.

        Plain rows are sliced out by one regex and their parameter lists are
        read by a lighter tokenizer; reference-free lists are parsed once
        and shared. Anything unusual (comments, errors, the section end) goes
        through the token machine, which also produces the diagnostics.
        """
        text = self.text
        rows: list = []
        seen: set = set()
        shared: dict = {}
        row_match = _ROW.match
        pos = self.pos
        while True:
            m = row_match(text, pos)
            if m is not None:
                args = m.group(3)
                attributes = shared.get(args)
                if attributes is None:
                    attributes = _fast_arguments(args)
                    if attributes is None:
                        m = None
                    elif "#" not in args:
                        shared[args] = attributes
            if m is None:
                self.start_tokens(pos)
                row = self.parse_row()
                if row is None:
                    return rows
                ident, type_name, attributes, start = row
                pos = self.pos
            else:
                ident = int(m.group(1))
                type_name = m.group(2).upper()
                start = m.start(1) - 1
                pos = m.end()
            if ident in seen:
                raise DuplicateIdError(ident, self.where(start)[0])
            if ident < 1:
                raise self.error(f"instance name #{ident} must be positive", start)
            seen.add(ident)
            rows.append(EntityInstance(ident, type_name, attributes))

    def parse_row(self):
        """One row through the token machine, or ``None`` at ``ENDSEC;``."""
        m, kind = self.next()
        if kind == "ref":
            ident = int(m.group("ref")[1:])
            start = m.start("ref")
            self.expect("=")
            m2, kind2 = self.next()
            if kind2 != "kw":
                if kind2 == "p" and m2.group("p") == "(":
                    raise self.error("complex entity instances are not supported", m2.start("p"))
                raise self.error("expected entity type name", m2.start(kind2))
            type_name = m2.group("kw").upper()
            self.expect("(")
            attributes, _ = self.parse_arguments()
            self.pos = self.expect(";").end()
            return ident, type_name, attributes, start
        if kind == "kw" and m.group("kw").upper() == "ENDSEC":
            self.pos = self.expect(";").end()
            return None
        if kind == "end":
            raise self.error("unexpected end of file in DATA section", m.start("end"))
        raise self.error("expected instance '#id=' or ENDSEC", m.start(kind))


def parse(data: Union[bytes, str]) -> RawFile:
    """Parse a complete exchange structure.

    Bytes are decoded as Latin-1 so that every input byte survives into
    string values unchanged.
    """
    text = data.decode("latin-1") if isinstance(data, (bytes, bytearray)) else data
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Rendering


def format_real(value: float) -> str:
    """Shortest decimal text that reads back as exactly ``value``.

    >>> format_real(10.0), format_real(2.5e-7), format_real(-0.0)
    ('10.', '2.5E-7', '-0.')
    """
    text = repr(value)
    if "n" in text:  # inf, nan
        raise ValueError(f"non-finite real {value!r} cannot be written")
    mantissa, sep, exponent = text.partition("e")
    if "." in mantissa:
        mantissa = mantissa.rstrip("0")
    else:
        mantissa += "."
    if sep:
        return f"{mantissa}E{int(exponent)}"
    return mantissa


def _ref_as_name(ident: int) -> str:
    return f"#{ident}"


def render_value(value, ref: Callable[[int], str] = _ref_as_name) -> str:
    """Render one attribute value; ``ref`` decides how references print."""
    t = type(value)
    if t is Ref:
        return ref(value.id)
    if t is tuple:
        return "(" + ",".join([render_value(v, ref) for v in value]) + ")"
    if t is float:
        return format_real(value)
    if t is Text:
        return "'" + value.raw + "'"
    if t is int:
        return str(value)
    if value is NULL:
        return "$"
    if t is Enumeration:
        return "." + value.name + "."
    if t is Typed:
        return value.keyword + "(" + render_value(value.value, ref) + ")"
    if value is DERIVED:
        return "*"
    if t is Binary:
        return '"' + value.payload + '"'
    raise TypeError(f"not an attribute value: {value!r}")


def render_attributes(attributes: Iterable, ref: Callable[[int], str] = _ref_as_name) -> str:
    return "(" + ",".join([render_value(v, ref) for v in attributes]) + ")"


def canonical_row(instance: EntityInstance, ref: Callable[[int], str] = _ref_as_name) -> str:
    """``#<id>=<TYPE>(<args>);`` with no whitespace."""
    return f"#{instance.id}={instance.type_name}{render_attributes(instance.attributes, ref)};"


def iter_refs(value):
    """Yield referenced instance names in attribute order, duplicates kept."""
    t = type(value)
    if t is Ref:
        yield value.id
    elif t is tuple:
        for v in value:
            if type(v) is Ref:
                yield v.id
            elif type(v) is tuple or type(v) is Typed:
                yield from iter_refs(v)
    elif t is Typed:
        yield from iter_refs(value.value)


def _top_level_spans(args: str) -> list[tuple[int, int]]:
    """Character spans of the comma-separated top-level parameters of ``args``."""
    spans = []
    depth = 0
    start = None
    end = 0
    for m in _TOKEN.finditer(args):
        kind = m.lastgroup
        if kind == "end":
            break
        tok = m.group(kind)
        if kind == "p" and tok == "," and depth == 0:
            spans.append((start if start is not None else m.start(kind), end))
            start = None
            continue
        if start is None:
            start = m.start(kind)
        if kind == "p" and tok == "(":
            depth += 1
        elif kind == "p" and tok == ")":
            depth -= 1
        end = m.end(kind)
    if start is not None:
        spans.append((start, end))
    return spans


def strip_timestamp(file_name_args: str) -> str:
    spans = _top_level_spans(file_name_args)
    if len(spans) < 2:
        return file_name_args
    a, b = spans[1]
    return file_name_args[:a] + "''" + file_name_args[b:]


def write_file(
    rows: Iterable[EntityInstance],
    header: Iterable[tuple[str, str]],
    options: WriterOptions = WriterOptions(),
    ref: Callable[[int], str] = _ref_as_name,
) -> bytes:
    """Serialise rows (ascending, unique IDs) under a verbatim header."""
    lines = ["ISO-10303-21;", "HEADER;"]
    for keyword, args in header:
        if keyword == "FILE_NAME" and options.strip_header_timestamp:
            args = strip_timestamp(args)
        lines.append(f"{keyword}({args});")
    lines.append("ENDSEC;")
    lines.append("DATA;")
    previous = 0
    for row in rows:
        if row.id <= previous:
            if row.id == previous:
                raise DuplicateIdError(row.id)
            raise StepError(f"rows are not sorted: #{row.id} follows #{previous}")
        previous = row.id
        lines.append(canonical_row(row, ref))
    lines.append("ENDSEC;")
    lines.append("END-ISO-10303-21;")
    lines.append("")
    return "\n".join(lines).encode("latin-1")


def transform_refs(value, mapping: Callable[[int], object]):
    """Copy of ``value`` with every reference replaced by ``mapping(id)``.

    ``mapping`` returns the replacement attribute value (usually a ``Ref``).
    """
    t = type(value)
    if t is Ref:
        return mapping(value.id)
    if t is tuple:
        return tuple([transform_refs(v, mapping) for v in value])
    if t is Typed:
        return Typed(value.keyword, transform_refs(value.value, mapping))
    return value
