"""Cube construction, algebra (rollup, drilldown, slice, dice), aggregation."""

import random

import pytest

from jobcube.cube import (
    AggregateQuery,
    aggregate,
    build_cube,
    dice,
    drilldown,
    rollup,
    slice_cube,
)
from jobcube.errors import (
    BadLevel,
    BadQuery,
    EmptyMemberSet,
    UnknownMember,
)
from jobcube.warehouse import build_schema

from oracle import (
    congress_city_map,
    make_hierarchy,
    oracle_aggregate,
    random_clean_records,
    record_label,
    table_as_dict,
)

YEARS = (2000, 2006)


def build(seed: int, n: int):
    records = random_clean_records(seed, n)
    schema = build_schema(records, YEARS, make_hierarchy())
    return records, build_cube(schema), congress_city_map(records)


@pytest.fixture(scope="module")
def fixture():
    return build(21, 2500)


class TestBuild:
    def test_cells_match_oracle(self, fixture):
        records, cube, cities = fixture
        dims = [("city", "city"), ("sector", "sector"), ("edulevel", "edulevel"),
                ("congress", "congress"), ("service", "service"),
                ("time", "quarter")]
        want = oracle_aggregate(records, "total", dims, [], cities)
        got = {coord: t for coord, (t, s, d) in cube.cells.items()}
        assert got == want

    def test_axis_members_sorted(self, fixture):
        _, cube, _ = fixture
        for axis in cube.axes:
            assert list(axis.members) == sorted(axis.members)

    def test_mass_is_record_count(self, fixture):
        records, cube, _ = fixture
        assert cube.mass() == (len(records),
                               sum(r.status == "seeker" for r in records),
                               sum(r.status == "directed" for r in records))


class TestRollup:
    def test_quarter_to_year_conserves_measures(self, fixture):
        _, cube, _ = fixture
        rolled = rollup(cube, "time", "year")
        assert rolled.mass() == cube.mass()
        axis = rolled.axis("time")
        assert axis.level == "year"
        assert list(axis.members) == [str(y) for y in range(2000, 2007)]

    def test_congress_to_city_conserves_measures(self, fixture):
        _, cube, _ = fixture
        rolled = rollup(cube, "congress", "city")
        assert rolled.mass() == cube.mass()
        assert rolled.axis("congress").level == "city"

    def test_rolled_cells_match_oracle(self, fixture):
        records, cube, cities = fixture
        rolled = rollup(cube, "time", "year")
        got = table_as_dict(aggregate(rolled, AggregateQuery(
            "total", group_by=(("time", "year"),))))
        want = oracle_aggregate(records, "total", [("time", "year")], [], cities)
        assert got == want

    def test_rollup_requires_coarser_level(self, fixture):
        _, cube, _ = fixture
        with pytest.raises(BadLevel):
            rollup(cube, "time", "quarter")
        with pytest.raises(BadLevel):
            rollup(cube, "sector", "galaxy")

    def test_cell_additivity_everywhere(self, fixture):
        _, cube, _ = fixture
        for c in (cube, rollup(cube, "time", "year"),
                  rollup(cube, "congress", "city")):
            for t, s, d in c.cells.values():
                assert t == s + d


class TestDrilldown:
    def test_returns_to_base_grain(self, fixture):
        _, cube, _ = fixture
        year_cube = rollup(cube, "time", "year")
        back = drilldown(year_cube, cube, "time", "quarter")
        assert back.cells == cube.cells

    def test_rejects_level_not_below_current(self, fixture):
        _, cube, _ = fixture
        year_cube = rollup(cube, "time", "year")
        with pytest.raises(BadLevel):
            drilldown(year_cube, cube, "time", "year")
        with pytest.raises(BadLevel):
            drilldown(cube, cube, "time", "quarter")


class TestSlice:
    def test_removes_axis_and_filters(self, fixture):
        records, cube, cities = fixture
        sliced = slice_cube(cube, "city", "CityA")
        assert all(axis.dimension != "city" for axis in sliced.axes)
        in_city = [r for r in records if r.city == "CityA"]
        assert sliced.mass()[0] == len(in_city)
        got = table_as_dict(aggregate(sliced, AggregateQuery(
            "seekers", group_by=("sector",))))
        want = oracle_aggregate(in_city, "seekers", [("sector", "sector")],
                                [], cities)
        assert got == want

    def test_unknown_member(self, fixture):
        _, cube, _ = fixture
        with pytest.raises(UnknownMember):
            slice_cube(cube, "city", "Atlantis")


class TestDice:
    def test_restricts_members(self, fixture):
        records, cube, cities = fixture
        diced = dice(cube, [("sector", ("SEC-A", "SEC-B")),
                            ("service", ("svc1",))])
        kept = [r for r in records
                if r.sector in ("SEC-A", "SEC-B") and r.service_status == "svc1"]
        assert diced.mass()[0] == len(kept)
        assert set(diced.axis("sector").members) == {"SEC-A", "SEC-B"}

    def test_repeated_filters_intersect(self, fixture):
        _, cube, _ = fixture
        diced = dice(cube, [("sector", ("SEC-A", "SEC-B")),
                            ("sector", ("SEC-B", "SEC-C"))])
        assert tuple(diced.axis("sector").members) == ("SEC-B",)
        with pytest.raises(EmptyMemberSet):
            dice(cube, [("sector", ("SEC-A",)), ("sector", ("SEC-B",))])

    def test_empty_or_unknown_members(self, fixture):
        _, cube, _ = fixture
        with pytest.raises(EmptyMemberSet):
            dice(cube, [("sector", ())])
        with pytest.raises(UnknownMember):
            dice(cube, [("sector", ("SEC-A", "NOPE"))])


class TestAggregate:
    def test_group_by_levels_name_columns(self, fixture):
        _, cube, _ = fixture
        base = aggregate(cube, AggregateQuery("total", group_by=("sector",)))
        assert base.columns == ("sector", "total")
        lifted = aggregate(cube, AggregateQuery(
            "total", group_by=(("time", "year"), ("congress", "city"))))
        assert lifted.columns == ("time_year", "congress_city", "total")

    def test_empty_group_by_single_row(self, fixture):
        records, cube, _ = fixture
        table = aggregate(cube, AggregateQuery("total"))
        assert table.columns == ("total",)
        assert table.rows == ((len(records),),)

    def test_empty_group_by_no_match_is_zero(self, fixture):
        _, cube, _ = fixture
        # a year with no records still answers, with a zero
        empty_years = aggregate(cube, AggregateQuery(
            "total", filters=(("sector", ("SEC-A",)),
                              ("service", ("svc2",)),
                              ("time", "year", ("2000",)),
                              ("city", ("CityC",)),
                              ("edulevel", ("edu6",)))))
        assert len(empty_years.rows) == 1

    def test_rows_sorted_by_labels(self, fixture):
        _, cube, _ = fixture
        table = aggregate(cube, AggregateQuery(
            "total", group_by=("city", "sector")))
        labels = [row[:-1] for row in table.rows]
        assert labels == sorted(labels)

    def test_filters_at_lifted_level(self, fixture):
        records, cube, cities = fixture
        table = aggregate(cube, AggregateQuery(
            "directed", group_by=("sector",),
            filters=(("time", "year", ("2003", "2004")),)))
        want = oracle_aggregate(records, "directed", [("sector", "sector")],
                                [("time", "year", ("2003", "2004"))], cities)
        assert table_as_dict(table) == want

    def test_bad_queries(self, fixture):
        _, cube, _ = fixture
        with pytest.raises(BadQuery):
            aggregate(cube, AggregateQuery("median", group_by=("sector",)))
        with pytest.raises(BadQuery):
            aggregate(cube, AggregateQuery("total", group_by=("sector", "sector")))
        with pytest.raises(BadQuery):
            aggregate(cube, AggregateQuery("total", group_by=("flavor",)))
        with pytest.raises(UnknownMember):
            aggregate(cube, AggregateQuery(
                "total", filters=(("sector", ("NOPE",)),)))
        with pytest.raises(BadLevel):
            aggregate(cube, AggregateQuery("total", group_by=(("time", "era"),)))

    def test_seeded_battery_matches_oracle(self):
        rnd = random.Random(5150)
        levels = {"city": ("city",), "sector": ("sector",),
                  "edulevel": ("edulevel",), "service": ("service",),
                  "congress": ("congress", "city"),
                  "time": ("quarter", "year")}
        for seed in range(8):
            records, cube, cities = build(400 + seed, rnd.randint(100, 1500))
            label_universe = {}
            for dim, choices in levels.items():
                for level in choices:
                    label_universe[(dim, level)] = sorted(
                        {record_label(r, dim, level, cities) for r in records})
            for _ in range(25):
                measure = rnd.choice(("total", "seekers", "directed"))
                group_dims = rnd.sample(sorted(levels), rnd.randint(0, 3))
                group_by = tuple((d, rnd.choice(levels[d])) for d in group_dims)
                filters = []
                for d in rnd.sample(sorted(levels), rnd.randint(0, 2)):
                    level = rnd.choice(levels[d])
                    universe = label_universe[(d, level)]
                    members = tuple(rnd.sample(universe,
                                               rnd.randint(1, min(3, len(universe)))))
                    filters.append((d, level, members))
                query = AggregateQuery(measure, group_by, tuple(filters))
                got = table_as_dict(aggregate(cube, query))
                want = oracle_aggregate(records, measure, list(group_by),
                                        filters, cities)
                assert got == want, query
