import math
import struct

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import ifcnorm.step as step
from ifcnorm.step import (
    DERIVED,
    NULL,
    Binary,
    DuplicateIdError,
    EntityInstance,
    Enumeration,
    Ref,
    StepError,
    StepSyntaxError,
    Text,
    Typed,
    WriterOptions,
    canonical_row,
    format_real,
    parse,
    render_attributes,
    strip_timestamp,
    write_file,
)

from conftest import ifc_text

# --------------------------------------------------------------------------
# parse


def test_wall_row_has_text_then_eight_nulls():
    raw = parse(ifc_text("#1=IFCWALL('guid',$,$,$,$,$,$,$,$);"))
    (row,) = raw.data_rows
    assert (row.id, row.type_name) == (1, "IFCWALL")
    assert row.attributes == (Text("guid"),) + (NULL,) * 8


def test_point_reals_follow_the_real_grammar():
    (row,) = parse(ifc_text("#5=IFCCARTESIANPOINT((0.,1.E1,2.5));")).data_rows
    assert row.attributes == ((0.0, 10.0, 2.5),)
    assert all(type(v) is float for v in row.attributes[0])


def test_duplicate_instance_name_is_rejected():
    with pytest.raises(DuplicateIdError) as info:
        parse(ifc_text("#7=IFCDIRECTION((1.,0.));\n#7=IFCDIRECTION((0.,1.));"))
    assert info.value.instance_id == 7


def test_every_value_kind():
    (row,) = parse(ifc_text("#3=T(*,$,-12,3.5,'a''b',.top.,\"0a\",#9,(1,(2)),IFCLABEL('x'),());")).data_rows
    assert row.attributes == (
        DERIVED,
        NULL,
        -12,
        3.5,
        Text("a''b"),
        Enumeration("TOP"),
        Binary("0A"),
        Ref(9),
        (1, (2,)),
        Typed("IFCLABEL", Text("x")),
        (),
    )


def test_comments_and_whitespace_are_discarded():
    text = ifc_text("#1 = IFCPOINT ( ( 1. , /* x */ 2. ) ) ;\n/* between rows */\n#2=IFCPOINT((1.,2.));")
    a, b = parse(text).data_rows
    assert a.attributes == b.attributes == ((1.0, 2.0),)


def test_strings_are_kept_byte_exact():
    raw = "it''s \\X2\\00E9\\X0\\ ; /* not a comment */ \xe9"
    (row,) = parse(ifc_text(f"#1=T('{raw}');")).data_rows
    assert row.attributes[0].raw == raw


def test_header_records_and_schema():
    raw = parse(ifc_text("#1=T($);", schema="IFC2X3"))
    assert [k for k, _ in raw.header_records] == ["FILE_DESCRIPTION", "FILE_NAME", "FILE_SCHEMA"]
    assert raw.schema_name == "IFC2X3"
    assert raw.header_records[2][1] == "('IFC2X3')"


def test_empty_data_section():
    assert parse(ifc_text("")).data_rows == []


@pytest.mark.parametrize(
    "source, message",
    [
        ("ISO-10303-21;\nHEADER;\nFILE_DESCRIPTION((''),'2;1');\nFILE_NAME('','',(''),(''),'','','');\n"
         "FILE_SCHEMA(('IFC4'));\nENDSEC;\nEND-ISO-10303-21;\n", "missing DATA section"),
        ("ISO-10303-21;\nHEADER;\nFILE_NAME('','',(''),(''),'','','');\nFILE_DESCRIPTION((''),'2;1');\n"
         "FILE_SCHEMA(('IFC4'));\nENDSEC;\nDATA;\nENDSEC;\nEND-ISO-10303-21;\n", "header must contain"),
        ("HEADER;", "missing 'ISO-10303-21;'"),
    ],
)
def test_structural_errors(source, message):
    with pytest.raises(StepError, match=message):
        parse(source)


def test_unterminated_string_reports_line_and_column():
    with pytest.raises(StepSyntaxError, match="unterminated string") as info:
        parse(ifc_text("#1=T($);\n#2=T('open);"))
    assert info.value.line == 9
    assert info.value.column == 6


@pytest.mark.parametrize(
    "row, message",
    [
        ("#1=T(@2);", "external and constant references"),
        ("#1=(A(1)B(2));", "complex entity instances"),
        ("#0=T($);", "must be positive"),
        ("#1=T($,);", "missing parameter"),
        ("#1=T($ $);", "expected ','"),
        ("#1=T($)", "expected ';'"),
        ("#1=T(IFCLABEL('a','b'));", "exactly one value"),
        ("#1=T(?);", "unexpected character"),
        ("1=T($);", "expected instance"),
    ],
)
def test_row_errors(row, message):
    with pytest.raises(StepSyntaxError, match=message):
        parse(ifc_text(row))


def test_unsupported_sections():
    base = ifc_text("#1=T($);").decode()
    with pytest.raises(StepSyntaxError, match="multiple DATA sections"):
        parse(base.replace("END-ISO-10303-21;", "DATA;\nENDSEC;\nEND-ISO-10303-21;"))
    with pytest.raises(StepSyntaxError, match="parameterised DATA"):
        parse(base.replace("DATA;", "DATA(('x'));"))
    with pytest.raises(StepSyntaxError, match="ANCHOR section"):
        parse(base.replace("DATA;", "ANCHOR;\nENDSEC;\nDATA;"))


# --------------------------------------------------------------------------
# canonical_row and reals


def test_canonical_row_examples():
    assert canonical_row(EntityInstance(1, "IFCWALL", (Text("a"), NULL))) == "#1=IFCWALL('a',$);"
    (row,) = parse(ifc_text("#2=T(1.E1);")).data_rows
    assert canonical_row(row) == "#2=T(10.);"
    assert render_attributes(((Ref(3), Ref(9)),)) == "((#3,#9))"


@pytest.mark.parametrize(
    "value, text",
    [(10.0, "10."), (0.5, "0.5"), (-0.0, "-0."), (1e-05, "1.E-5"), (2.5e-7, "2.5E-7"), (1e22, "1.E22"),
     (123456.789, "123456.789"), (5e-324, "5.E-324")],
)
def test_format_real(value, text):
    assert format_real(value) == text


@pytest.mark.parametrize("value", [math.inf, -math.inf, math.nan])
def test_non_finite_reals_cannot_be_written(value):
    with pytest.raises(ValueError):
        format_real(value)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_real_text_round_trips_exactly(value):
    text = format_real(value)
    assert "." in text and "e" not in text
    back = parse(ifc_text(f"#1=T({text});")).data_rows[0].attributes[0]
    assert struct.pack("<d", back) == struct.pack("<d", value)


# --------------------------------------------------------------------------
# write_file


def test_write_file_examples():
    raw = parse(ifc_text("#1=T('x');\n#2=T(#1);", timestamp="2023-02-01T10:00:00"))
    first = write_file(raw.data_rows, raw.header_records)
    assert first == write_file(raw.data_rows, raw.header_records)
    assert b"'2023-02-01T10:00:00'" in first and b"\r" not in first
    stripped = write_file(raw.data_rows, raw.header_records, WriterOptions(strip_header_timestamp=True))
    assert b"FILE_NAME('t.ifc','',(''),(''),'','','');" in stripped


def test_canonical_file_is_a_fixed_point():
    canonical = ifc_text("#1=IFCCARTESIANPOINT((0.,10.,2.5));\n#2=IFCPOLYLINE((#1,#1));\n#30=T('a',$,*,.X.);")
    raw = parse(canonical)
    assert write_file(raw.data_rows, raw.header_records) == canonical


def test_write_file_rejects_bad_order():
    rows = [EntityInstance(2, "T", ()), EntityInstance(1, "T", ())]
    with pytest.raises(StepError, match="not sorted"):
        write_file(rows, [])
    with pytest.raises(DuplicateIdError):
        write_file([EntityInstance(1, "T", ()), EntityInstance(1, "T", ())], [])


def test_strip_timestamp_only_touches_second_field():
    args = "'a,b.ifc' , '2023-02-01T10:00:00',('x','y'),(''),'','',''"
    assert strip_timestamp(args) == "'a,b.ifc' , '',('x','y'),(''),'','',''"


# --------------------------------------------------------------------------
# properties over generated instances

_names = st.from_regex(r"[A-Z][A-Z0-9_]{0,12}", fullmatch=True)
_text = st.lists(
    st.one_of(st.sampled_from(["''", "\\X2\\00E9\\X0\\", "/*", "*/", ";", "#1", ")", "("]),
              st.characters(min_codepoint=32, max_codepoint=255, blacklist_characters="'")),
    max_size=12,
).map("".join)
_scalars = st.one_of(
    st.just(NULL),
    st.just(DERIVED),
    st.integers(min_value=-(10**30), max_value=10**30),
    st.floats(allow_nan=False, allow_infinity=False),
    _text.map(Text),
    _names.map(Enumeration),
    st.from_regex(r"[0-9A-F]{0,8}", fullmatch=True).map(Binary),
    st.integers(min_value=1, max_value=10**6).map(Ref),
)
_values = st.recursive(
    _scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=4).map(tuple),
        st.tuples(_names, inner).map(lambda kv: Typed(*kv)),
    ),
    max_leaves=12,
)
_rows = st.lists(st.tuples(_names, st.lists(_values, max_size=6).map(tuple)), min_size=1, max_size=8)


def _strict(value):
    """Structural key that separates 1 from 1.0 and 0.0 from -0.0."""
    t = type(value)
    if t is float:
        return ("real", value.hex())
    if t is int:
        return ("int", value)
    if t is tuple:
        return ("list",) + tuple(_strict(v) for v in value)
    if t is Typed:
        return ("typed", value.keyword, _strict(value.value))
    return (t.__name__, repr(value))


def _rows_text(rows) -> bytes:
    return ifc_text("\n".join(canonical_row(EntityInstance(i + 1, t, a)) for i, (t, a) in enumerate(rows)))


@settings(max_examples=150)
@given(_rows)
def test_parse_write_round_trip(rows):
    raw = parse(_rows_text(rows))
    assert [(r.type_name, _strict(r.attributes)) for r in raw.data_rows] == [(t, _strict(a)) for t, a in rows]
    again = parse(write_file(raw.data_rows, raw.header_records))
    assert [_strict(r.attributes) for r in again.data_rows] == [_strict(r.attributes) for r in raw.data_rows]


@settings(max_examples=150)
@given(_rows, st.randoms(use_true_random=False))
def test_fast_path_matches_token_machine(rows, rnd):
    # sprinkle whitespace and comments so both paths get exercised
    lines = []
    for i, (t, a) in enumerate(rows):
        line = canonical_row(EntityInstance(i + 1, t, a))
        if rnd.random() < 0.3:
            line = line.replace(",", " , ", 1)
        if rnd.random() < 0.2:
            line = line.replace("=", "= /* c */ ", 1)
        lines.append(line)
    text = ifc_text("\n".join(lines))
    fast = parse(text)
    original, step._ROW = step._ROW, _NeverMatches()
    try:
        slow = parse(text)
    finally:
        step._ROW = original
    assert [(r.id, r.type_name, _strict(r.attributes)) for r in fast.data_rows] == [
        (r.id, r.type_name, _strict(r.attributes)) for r in slow.data_rows
    ]


class _NeverMatches:
    @staticmethod
    def match(*_):
        return None


@given(st.lists(_values, max_size=4).map(tuple), st.lists(_values, max_size=4).map(tuple))
def test_canonical_rendering_is_injective(a, b):
    assume(_strict(a) != _strict(b))
    assert render_attributes(a) != render_attributes(b)
