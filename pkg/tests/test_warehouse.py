"""Star schema: dimension building, fact loading, persistence, refresh."""

import random
from dataclasses import replace

import pytest

from jobcube.errors import (
    CorruptManifest,
    EmptyYearRange,
    InvalidFieldValue,
    UnresolvedDimensionValue,
)
from jobcube.records import CanonicalApplicant, derive_status
from jobcube.warehouse import (
    DIM_FILES,
    DimensionRow,
    DimensionTable,
    FactRow,
    StarSchema,
    build_dimensions,
    build_schema,
    check_integrity,
    fact_index,
    load_facts,
    load_schema,
    logically_equal,
    persist,
    refresh,
)

from oracle import make_hierarchy, random_clean_records

YEARS = (2000, 2006)


@pytest.fixture(scope="module")
def schema():
    return build_schema(random_clean_records(1, 2000), YEARS, make_hierarchy())


class TestDimensions:
    def test_time_is_exhaustive(self, schema):
        time = schema.dimensions["time"]
        assert len(time) == 28
        keys = [r.natural_key for r in time.rows]
        assert keys[:4] == ["2000Q1", "2000Q2", "2000Q3", "2000Q4"]
        assert keys[-1] == "2006Q4"
        per_year = {}
        for r in time.rows:
            per_year.setdefault(r.attributes["year"], []).append(
                r.attributes["quarter"])
        assert all(sorted(qs) == ["Q1", "Q2", "Q3", "Q4"]
                   for qs in per_year.values())

    def test_ids_dense_and_sorted(self, schema):
        for table in schema.dimensions.values():
            assert [r.surrogate_id for r in table.rows] == list(
                range(1, len(table) + 1))
            keys = [r.natural_key for r in table.rows]
            assert keys == sorted(keys)

    def test_observed_members_only(self, schema):
        records = random_clean_records(1, 2000)
        assert {r.natural_key for r in schema.dimensions["sector"].rows} == {
            rec.sector for rec in records}
        assert {r.natural_key for r in schema.dimensions["edulevel"].rows} == {
            rec.education_level for rec in records}

    def test_empty_sector_is_a_member(self, schema):
        assert "" in {r.natural_key for r in schema.dimensions["sector"].rows}

    def test_congress_rows_carry_city_parent(self, schema):
        attrs = {r.natural_key: r.attributes["city"]
                 for r in schema.dimensions["congress"].rows}
        assert attrs["CGA1"] == "CityA"
        assert attrs["CGB2"] == "CityB"
        assert attrs["UNKNOWN"] == "UNKNOWN"     # unmapped values parent to themselves

    def test_empty_year_range(self):
        with pytest.raises(EmptyYearRange):
            build_dimensions([], (2005, 2004))


class TestFacts:
    def test_grain_and_conservation(self, schema):
        records = random_clean_records(1, 2000)
        keys = [f.key() for f in schema.facts]
        assert len(keys) == len(set(keys))
        assert sum(f.total_applicants for f in schema.facts) == len(records)
        for f in schema.facts:
            assert f.total_applicants == f.num_seekers + f.num_directed

    def test_fact_reflects_records(self, schema):
        records = random_clean_records(1, 2000)
        want = {}
        for r in records:
            key = (r.city, r.sector, r.education_level, r.congress,
                   r.service_status, f"{r.year}{r.quarter}")
            t, s, d = want.get(key, (0, 0, 0))
            want[key] = (t + 1, s + (r.status == "seeker"),
                         d + (r.status == "directed"))
        assert fact_index(schema) == want

    def test_unresolved_member_rejected(self):
        records = random_clean_records(2, 50)
        dims = build_dimensions(records, YEARS)
        alien = replace(records[0], sector="NEVER-SEEN", status="directed")
        with pytest.raises(UnresolvedDimensionValue):
            load_facts(records + [alien], dims)

    def test_year_outside_range_rejected(self):
        records = random_clean_records(3, 50)
        dims = build_dimensions(records, YEARS)
        alien = replace(records[0], year=1999)
        with pytest.raises(UnresolvedDimensionValue):
            load_facts(records + [alien], dims)

    def test_bad_status_rejected(self):
        records = random_clean_records(4, 10)
        dims = build_dimensions(records, YEARS)
        bad = replace(records[0], status="waiting")
        with pytest.raises(InvalidFieldValue):
            load_facts([bad], dims)


class TestPersistence:
    def test_round_trip(self, tmp_path, schema):
        persist(schema, tmp_path / "w")
        loaded = load_schema(tmp_path / "w")
        assert logically_equal(loaded, schema)
        assert loaded.meta == schema.meta
        for dim, table in schema.dimensions.items():
            assert loaded.dimensions[dim].rows == table.rows

    def test_expected_files(self, tmp_path, schema):
        persist(schema, tmp_path / "w")
        names = {p.name for p in (tmp_path / "w").iterdir()}
        assert names == {"manifest.txt", "fact.csv", *DIM_FILES.values()}

    def test_byte_deterministic(self, tmp_path, schema):
        persist(schema, tmp_path / "w1")
        persist(schema, tmp_path / "w2")
        for p1 in sorted((tmp_path / "w1").iterdir()):
            assert p1.read_bytes() == (tmp_path / "w2" / p1.name).read_bytes()

    def test_load_stamp_is_content_derived(self, tmp_path, schema):
        assert schema.meta["loaded"].startswith("content:")
        rebuilt = build_schema(random_clean_records(1, 2000), YEARS,
                               make_hierarchy())
        assert rebuilt.meta["loaded"] == schema.meta["loaded"]

    def test_tampered_table_detected(self, tmp_path, schema):
        persist(schema, tmp_path / "w")
        fact = tmp_path / "w" / "fact.csv"
        fact.write_bytes(fact.read_bytes().replace(b"1", b"2", 1))
        with pytest.raises(CorruptManifest):
            load_schema(tmp_path / "w")

    def test_missing_table_detected(self, tmp_path, schema):
        persist(schema, tmp_path / "w")
        (tmp_path / "w" / "dim_sector.csv").unlink()
        with pytest.raises(CorruptManifest):
            load_schema(tmp_path / "w")

    def test_damaged_manifest_detected(self, tmp_path, schema):
        persist(schema, tmp_path / "w")
        manifest = tmp_path / "w" / "manifest.txt"
        manifest.write_text("nonsense\n", encoding="utf-8")
        with pytest.raises(CorruptManifest):
            load_schema(tmp_path / "w")


class TestIntegrity:
    def test_clean_schema_passes(self, schema):
        assert check_integrity(schema) == []

    def test_detects_dangling_foreign_key(self, schema):
        bad_fact = replace(schema.facts[0], city_id=999)
        broken = StarSchema(schema.dimensions, (*schema.facts[1:], bad_fact),
                            schema.meta)
        assert any("city" in issue for issue in check_integrity(broken))

    def test_detects_measure_mismatch(self, schema):
        f = schema.facts[0]
        bad_fact = replace(f, total_applicants=f.total_applicants + 1)
        broken = StarSchema(schema.dimensions, (*schema.facts[1:], bad_fact),
                            schema.meta)
        assert check_integrity(broken) != []

    def test_detects_sparse_ids(self, schema):
        rows = schema.dimensions["sector"].rows
        gappy = DimensionTable("Sector", (*rows[:-1],
                                          replace(rows[-1], surrogate_id=99)))
        broken = StarSchema({**schema.dimensions, "sector": gappy},
                            schema.facts, schema.meta)
        assert any("Sector" in issue and "dense" in issue
                   for issue in check_integrity(broken))

    def test_detects_duplicate_fact_key(self, schema):
        broken = StarSchema(schema.dimensions,
                            (*schema.facts, schema.facts[0]), schema.meta)
        assert any("duplicate" in issue for issue in check_integrity(broken))


class TestRefresh:
    def test_ids_append_only(self):
        hierarchy = make_hierarchy()
        records = random_clean_records(7, 800)
        first, rest = records[:500], records
        schema = build_schema(first, YEARS, hierarchy)
        refreshed = refresh(schema, rest, hierarchy)
        for dim, table in schema.dimensions.items():
            new_ids = {r.natural_key: r.surrogate_id
                       for r in refreshed.dimensions[dim].rows}
            for row in table.rows:
                assert new_ids[row.natural_key] == row.surrogate_id

    def test_matches_rebuild_logically(self):
        hierarchy = make_hierarchy()
        rnd = random.Random(99)
        for trial in range(20):
            records = random_clean_records(100 + trial, rnd.randint(30, 600))
            cut = rnd.randint(1, len(records) - 1)
            schema = build_schema(records[:cut], YEARS, hierarchy)
            refreshed = refresh(schema, records, hierarchy)
            rebuilt = build_schema(records, YEARS, hierarchy)
            assert logically_equal(refreshed, rebuilt)
            assert check_integrity(refreshed) == []

    def test_noop_refresh_identical(self):
        hierarchy = make_hierarchy()
        records = random_clean_records(8, 300)
        schema = build_schema(records, YEARS, hierarchy)
        refreshed = refresh(schema, records, hierarchy)
        assert refreshed.dimensions == schema.dimensions
        assert refreshed.facts == schema.facts
        assert refreshed.meta == schema.meta
