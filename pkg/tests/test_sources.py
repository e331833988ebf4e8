"""Legacy format parsers and the canonical schema mapping."""

import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jobcube.datagen import render_dbf, render_delimited, render_fixed_width
from jobcube.errors import (
    ConfigError,
    InvalidFieldValue,
    MalformedHeader,
    MissingMandatoryField,
    RaggedRow,
    ShortLine,
    TruncatedFile,
    UnsupportedFieldType,
)
from jobcube.sources import (
    FieldDescriptor,
    RawRecord,
    SchemaMapping,
    SourceCounters,
    SourceSpec,
    map_to_canonical,
    parse_dbf,
    parse_delimited,
    parse_fixed_width,
    read_dbf,
    validate_layout,
)


def build_frozen_dbf() -> bytes:
    """Hand-assembled table: ID C4 + CITY C8, two records, second deleted.

    header_len = 32 + 32*2 + 1 = 97, record_len = 1 + 4 + 8 = 13.
    """
    head = bytes([0x03, 103, 7, 15])
    head += struct.pack("<IHH", 2, 97, 13)
    head += b"\x00" * 20
    desc_id = b"ID" + b"\x00" * 9 + b"C" + b"\x00" * 4 + bytes([4, 0]) + b"\x00" * 14
    desc_city = b"CITY" + b"\x00" * 7 + b"C" + b"\x00" * 4 + bytes([8, 0]) + b"\x00" * 14
    rec1 = b" " + b"A001" + b"Tripoli "
    rec2 = b"*" + b"A002" + b"Sirte   "
    return head + desc_id + desc_city + b"\x0d" + rec1 + rec2 + b"\x1a"


class TestDbf:
    def test_frozen_fixture_header_facts(self):
        table = read_dbf(build_frozen_dbf(), source_id="t")
        assert table.record_count == 2
        assert table.header_len == 97
        assert table.record_len == 13
        assert table.last_update == (103, 7, 15)
        assert [(f.name, f.kind, f.length, f.offset) for f in table.fields] == [
            ("ID", "C", 4, 0), ("CITY", "C", 8, 4)]

    def test_frozen_fixture_skips_deleted(self):
        table = read_dbf(build_frozen_dbf(), source_id="t")
        assert table.deleted == 1
        assert len(table.records) == 1
        assert table.records[0] == RawRecord("t", {"ID": "A001", "CITY": "Tripoli"})

    def test_character_fields_keep_leading_spaces(self):
        data = bytearray(build_frozen_dbf())
        body = 97 + 1          # first record body
        data[body:body + 4] = b" A1 "
        [rec] = parse_dbf(bytes(data))
        assert rec.values["ID"] == " A1"

    def test_bad_version_byte(self):
        data = bytearray(build_frozen_dbf())
        data[0] = 0x8B
        with pytest.raises(MalformedHeader):
            read_dbf(bytes(data))

    def test_truncated_header(self):
        with pytest.raises(TruncatedFile):
            read_dbf(build_frozen_dbf()[:20])

    def test_truncated_body(self):
        with pytest.raises(TruncatedFile):
            read_dbf(build_frozen_dbf()[:-10])

    def test_missing_terminator(self):
        data = bytearray(build_frozen_dbf())
        data[96] = 0x00
        with pytest.raises(MalformedHeader):
            read_dbf(bytes(data))

    def test_header_len_not_arithmetic(self):
        data = bytearray(build_frozen_dbf())
        struct.pack_into("<H", data, 8, 98)
        with pytest.raises(MalformedHeader):
            read_dbf(bytes(data))

    def test_record_len_mismatch(self):
        data = bytearray(build_frozen_dbf())
        struct.pack_into("<H", data, 10, 14)
        with pytest.raises(MalformedHeader):
            read_dbf(bytes(data))

    def test_unsupported_field_type(self):
        data = bytearray(build_frozen_dbf())
        data[32 + 11] = ord("M")        # memo fields are not supported
        with pytest.raises(UnsupportedFieldType):
            read_dbf(bytes(data))

    def test_unknown_deletion_flag_is_live(self):
        data = bytearray(build_frozen_dbf())
        data[97 + 13] = ord("?")        # only 0x2A means deleted
        table = read_dbf(bytes(data))
        assert len(table.records) == 2
        assert table.deleted == 0

    def test_zero_record_file(self):
        layout = (FieldDescriptor("A", "C", 3),)
        table = read_dbf(render_dbf([], layout))
        assert table.record_count == 0
        assert table.records == ()
        assert table.header_len == 32 + 32 + 1
        assert table.record_len == 4


DBF_LAYOUT = (FieldDescriptor("CODE", "C", 6), FieldDescriptor("QTY", "N", 4),
              FieldDescriptor("WHEN", "D", 8))

dbf_value = st.text(alphabet="ABCXYZ123", min_size=0, max_size=6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(dbf_value, st.integers(0, 9999)), max_size=20))
def test_dbf_round_trip(rows_src):
    rows = [{"CODE": code, "QTY": str(qty), "WHEN": "20040515"}
            for code, qty in rows_src]
    parsed = parse_dbf(render_dbf(rows, DBF_LAYOUT), source_id="x")
    assert [r.values for r in parsed] == rows


class TestFixedWidth:
    LAYOUT = (FieldDescriptor("A", "C", 4, 0), FieldDescriptor("B", "C", 6, 4),
              FieldDescriptor("Y", "N", 4, 10))

    def test_parses_and_strips_padding(self):
        text = "ab  ccc   2004\nx   y     1999\n"
        records = parse_fixed_width(text, self.LAYOUT, source_id="s")
        assert records[0].values == {"A": "ab", "B": "ccc", "Y": "2004"}
        assert records[1].values == {"A": "x", "B": "y", "Y": "1999"}

    def test_short_line_reports_position(self):
        with pytest.raises(ShortLine) as err:
            parse_fixed_width("ab  ccc   2004\nshort\n", self.LAYOUT)
        assert "line 2" in str(err.value)

    def test_longer_lines_keep_tail_unread(self):
        [rec] = parse_fixed_width("ab  ccc   2004TRAILING\n", self.LAYOUT)
        assert rec.values["Y"] == "2004"

    def test_missing_final_newline_ok(self):
        assert len(parse_fixed_width("ab  ccc   2004", self.LAYOUT)) == 1

    def test_empty_input(self):
        assert parse_fixed_width("", self.LAYOUT) == []

    def test_layout_validation(self):
        with pytest.raises(ConfigError):
            validate_layout([FieldDescriptor("A", "C", 3, 0),
                             FieldDescriptor("A", "C", 3, 3)])
        with pytest.raises(ConfigError):
            validate_layout([FieldDescriptor("A", "Q", 3, 0)])
        with pytest.raises(ConfigError):
            validate_layout([FieldDescriptor("A", "C", 3, 0),
                             FieldDescriptor("B", "C", 3, 2)])
        with pytest.raises(ConfigError):
            validate_layout([])


fw_value = st.text(alphabet="abcXYZ09-", min_size=0, max_size=6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(fw_value, fw_value), max_size=20))
def test_fixed_width_round_trip(pairs):
    layout = (FieldDescriptor("A", "C", 6, 0), FieldDescriptor("B", "C", 6, 6))
    rows = [{"A": a, "B": b} for a, b in pairs]
    parsed = parse_fixed_width(render_fixed_width(rows, layout), layout)
    assert [r.values for r in parsed] == rows


class TestDelimited:
    def test_header_names_columns(self):
        records = parse_delimited("a,b\n1,2\n3,4\n", source_id="d")
        assert [r.values for r in records] == [{"a": "1", "b": "2"},
                                               {"a": "3", "b": "4"}]

    def test_no_header_generates_names(self):
        [rec] = parse_delimited("1,2,3\n", has_header=False)
        assert rec.values == {"f0": "1", "f1": "2", "f2": "3"}

    def test_ragged_row(self):
        with pytest.raises(RaggedRow) as err:
            parse_delimited("a,b\n1,2\n1,2,3\n")
        assert "row 3" in str(err.value)

    def test_quoted_values_with_delimiter(self):
        [rec] = parse_delimited('a,b\n"x,y",2\n')
        assert rec.values == {"a": "x,y", "b": "2"}

    def test_values_kept_verbatim(self):
        [rec] = parse_delimited("a,b\n x ,2\n")
        assert rec.values["a"] == " x "

    def test_empty_input(self):
        assert parse_delimited("") == []


delim_value = st.text(
    alphabet=st.characters(codec="utf-8", exclude_characters="\r\n\x00"),
    min_size=0, max_size=8)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(delim_value, delim_value), max_size=20))
def test_delimited_round_trip(pairs):
    rows = [{"c1": a, "c2": b} for a, b in pairs]
    parsed = parse_delimited(render_delimited(rows, ("c1", "c2")))
    assert [r.values for r in parsed] == rows


def make_spec(value_codebooks=None) -> SourceSpec:
    mapping = SchemaMapping(
        field_map={"national_id": "NID", "year": "YR", "quarter": "QTR",
                   "sector": "SEC", "sex": "SX"},
        value_codebooks=value_codebooks or {})
    return SourceSpec("src", "CityX", "delimited", "x.csv", mapping)


class TestMapping:
    def test_maps_fields_and_fixes_city(self):
        spec = make_spec()
        rec = map_to_canonical(
            RawRecord("src", {"NID": "N1", "YR": "2003", "QTR": "Q2",
                              "SEC": "S9", "SX": "male"}),
            spec.mapping, spec)
        assert (rec.national_id, rec.year, rec.quarter) == ("N1", 2003, "Q2")
        assert rec.city == "CityX"
        assert rec.source_id == "src"

    def test_status_follows_sector(self):
        spec = make_spec()
        base = {"NID": "N1", "YR": "2003", "QTR": "Q2", "SX": "male"}
        directed = map_to_canonical(RawRecord("src", base | {"SEC": "S9"}),
                                    spec.mapping, spec)
        seeker = map_to_canonical(RawRecord("src", base | {"SEC": ""}),
                                  spec.mapping, spec)
        assert directed.status == "directed"
        assert seeker.status == "seeker"

    def test_codebook_translates_exact_codes(self):
        spec = make_spec({"sex": {"1": "male", "2": "female"}})
        counters = SourceCounters()
        rec = map_to_canonical(
            RawRecord("src", {"NID": "N1", "YR": "2003", "QTR": "Q2",
                              "SEC": "", "SX": "2"}),
            spec.mapping, spec, counters)
        assert rec.sex == "female"
        assert counters.untranslatable == {}

    def test_untranslatable_code_passes_through_and_counts(self):
        spec = make_spec({"sex": {"1": "male"}})
        counters = SourceCounters()
        rec = map_to_canonical(
            RawRecord("src", {"NID": "N1", "YR": "2003", "QTR": "Q2",
                              "SEC": "", "SX": "Male"}),
            spec.mapping, spec, counters)
        assert rec.sex == "Male"
        assert counters.untranslatable == {"sex": 1}

    def test_missing_mapped_field(self):
        spec = make_spec()
        with pytest.raises(MissingMandatoryField):
            map_to_canonical(RawRecord("src", {"NID": "N1"}), spec.mapping, spec)

    def test_bad_year(self):
        spec = make_spec()
        with pytest.raises(InvalidFieldValue):
            map_to_canonical(
                RawRecord("src", {"NID": "N1", "YR": "MMIV", "QTR": "Q2",
                                  "SEC": "", "SX": ""}),
                spec.mapping, spec)

    def test_empty_quarter(self):
        spec = make_spec()
        with pytest.raises(InvalidFieldValue):
            map_to_canonical(
                RawRecord("src", {"NID": "N1", "YR": "2004", "QTR": " ",
                                  "SEC": "", "SX": ""}),
                spec.mapping, spec)

    def test_mapping_must_cover_mandatory_fields(self):
        with pytest.raises(ConfigError):
            SchemaMapping(field_map={"national_id": "NID"}).require_mandatory()


class TestIngest:
    def test_generated_trio_ingests_clean(self, gen_small, etl_small):
        staged, _, report, _ = etl_small
        assert len(staged) == gen_small.expect.wire_rows
        assert report.rejects == []
        assert report.total_ok() == gen_small.expect.wire_rows
        by_source = {sid: c.records_read for sid, c in report.per_source.items()}
        assert set(by_source) == {"tripoli", "misurata", "sirte"}

    def test_untranslatable_counts_are_planted_variants(self, gen_small, etl_small):
        # only sources with ingest codebooks can hit untranslatable codes
        _, _, report, _ = etl_small
        planted = {"misurata": 0, "sirte": 0, "tripoli": 0}
        for city, _nid, _field, _value in gen_small.discrepancies:
            planted[city] += 1
        assert sum(report.per_source["misurata"].untranslatable.values()) == planted["misurata"]
        assert sum(report.per_source["sirte"].untranslatable.values()) == planted["sirte"]
        assert report.per_source["tripoli"].untranslatable == {}
