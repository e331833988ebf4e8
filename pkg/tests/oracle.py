"""Reference implementations the tests trust.

`oracle_aggregate` answers any aggregate query by one straight pass over
canonical records, written from first principles with no cube, no numpy,
and no shared helpers, so cube answers can be checked against it exactly.
The factories build already-cleaned record sets with a known address
hierarchy for property-style checks.
"""

from __future__ import annotations

import random

from jobcube.preprocess import ConceptHierarchy
from jobcube.records import QUARTERS, CanonicalApplicant, derive_status

EDU_LEVELS = ("edu1", "edu2", "edu3", "edu4", "edu5", "edu6")
SERVICES = ("svc1", "svc2", "svc3", "svc4")
SECTORS = ("", "SEC-A", "SEC-B", "SEC-C", "SEC-D", "SEC-E")

TREE = {
    "CityA": {"CGA1": ["DA11", "DA12"], "CGA2": ["DA21"]},
    "CityB": {"CGB1": ["DB11"], "CGB2": ["DB21", "DB22"]},
    "CityC": {"CGC1": ["DC11"]},
}
CITY_CONGRESSES = {
    "CityA": ("CGA1", "CGA2", "UNKNOWN"),
    "CityB": ("CGB1", "CGB2"),
    "CityC": ("CGC1", "UNKNOWN"),
}


def make_hierarchy() -> ConceptHierarchy:
    return ConceptHierarchy.from_tree(("district", "congress", "city"), TREE)


def congress_city_map(records) -> dict[str, str]:
    """congress -> city for every value the records use; unmapped values
    (like a fill constant) parent to themselves."""
    known = {}
    for city, congresses in TREE.items():
        for congress in congresses:
            known[congress] = city
    return {r.congress: known.get(r.congress, r.congress) for r in records}


def random_clean_records(seed: int, n: int,
                         year_from: int = 2000, year_to: int = 2006,
                         ) -> list[CanonicalApplicant]:
    """n post-cleaning records over the fixed three-city hierarchy."""
    rnd = random.Random(seed)
    cities = tuple(CITY_CONGRESSES)
    records = []
    for i in range(n):
        city = rnd.choice(cities)
        sector = rnd.choice(SECTORS)
        records.append(CanonicalApplicant(
            national_id=f"P{seed:04d}{i:06d}",
            congress=rnd.choice(CITY_CONGRESSES[city]),
            city=city,
            sector=sector,
            education_level=rnd.choice(EDU_LEVELS),
            service_status=rnd.choice(SERVICES),
            status=derive_status(sector),
            year=rnd.randint(year_from, year_to),
            quarter=rnd.choice(QUARTERS),
        ))
    return records


def record_label(record: CanonicalApplicant, dimension: str, level: str,
                 congress_city: dict[str, str]) -> str:
    if dimension == "time":
        if level == "year":
            return str(record.year)
        return f"{record.year}{record.quarter}"
    if dimension == "congress":
        if level == "city":
            return congress_city.get(record.congress, record.congress)
        return record.congress
    return {
        "city": record.city,
        "sector": record.sector,
        "edulevel": record.education_level,
        "service": record.service_status,
    }[dimension]


def measure_of(record: CanonicalApplicant, measure: str) -> int:
    if measure == "total":
        return 1
    if measure == "seekers":
        return 1 if record.status == "seeker" else 0
    if measure == "directed":
        return 1 if record.status == "directed" else 0
    raise ValueError(measure)


def oracle_aggregate(records, measure: str,
                     group_by: list[tuple[str, str]],
                     filters: list[tuple[str, str, tuple[str, ...]]],
                     congress_city: dict[str, str]) -> dict[tuple, int]:
    """Group labels -> measure sum. A group appears iff some record lands in
    it after filtering; with no grouping there is always exactly one group."""
    member_sets = [(dim, level, set(members)) for dim, level, members in filters]
    out: dict[tuple, int] = {} if group_by else {(): 0}
    for r in records:
        if any(record_label(r, dim, level, congress_city) not in members
               for dim, level, members in member_sets):
            continue
        key = tuple(record_label(r, dim, level, congress_city)
                    for dim, level in group_by)
        out[key] = out.get(key, 0) + measure_of(r, measure)
    return out


def table_as_dict(table) -> dict[tuple, int]:
    """ResultTable rows -> {label tuple: value}."""
    return {tuple(row[:-1]): row[-1] for row in table.rows}
