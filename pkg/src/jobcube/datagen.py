"""Synthetic three-city source generator.

Emits one fixed-width file, one delimited export, and one dBASE III table,
together with the ground-truth record set the pipeline should reconstruct
and a manifest of every planted corruption (cross-city duplicate
applications, blanked fields, variant code spellings).

Determinism: a pinned xorshift64* generator seeded through one splitmix64
step. State update x ^= x>>12; x ^= x<<25; x ^= x>>27; output is
x * 0x2545F4914F6CDD1D mod 2**64. Same seed, same bytes, any platform.

Planted corruption is bookkept so downstream cleaning counters are exactly
predictable: duplicate copies always lose the keep-latest rule (they are
planted one quarter before their donor), blanks hit only fillable fields,
and variant spellings always differ from the canonical value after trimming.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, FieldOverflow, UnsatisfiableSize
from .records import (
    QUARTERS,
    WAREHOUSE_REQUIRED_FIELDS,
    CanonicalApplicant,
    derive_status,
    project,
    quarter_index,
    write_records_csv,
)
from .sources import FieldDescriptor, SchemaMapping, SourceSpec

MASK64 = (1 << 64) - 1
DBF_VERSION_BYTE = 0x03

EDUCATION_LEVELS = ("primary", "preparatory", "secondary",
                    "diploma", "university", "postgraduate")
SERVICES = ("completed", "exempt", "deferred", "pending")

TRUTH_FILE = "truth.csv"
GEN_MANIFEST_FILE = "gen_manifest.txt"
SOURCES_FILE = "sources.yaml"
HIERARCHY_FILE = "hierarchy.yaml"
CODEBOOKS_FILE = "codebooks.yaml"


class Rng:
    """xorshift64*, seeded via one splitmix64 scramble. Pure integer math."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        z = (seed + 0x9E3779B97F4A7C15) & MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        z ^= z >> 31
        self.state = z or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def choice(self, seq: Sequence):
        return seq[self.randrange(len(seq))]

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), order rng-determined."""
        idx = list(range(n))
        for i in range(k):
            j = i + self.randrange(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k]


@dataclass(frozen=True)
class GenConfig:
    seed: int = 20060814
    counts: dict[str, int] | None = None            # persons per city
    target_bytes: dict[str, int] | None = None      # file size goals per city
    duplicate_rate: float = 0.05
    blank_rate: float = 0.03
    discrepancy_rate: float = 0.10
    year_from: int = 2000
    year_to: int = 2006
    sectors: int = 12
    congresses_per_city: int = 4
    districts_per_congress: int = 3
    education_levels: tuple[str, ...] = EDUCATION_LEVELS
    services: tuple[str, ...] = SERVICES
    directed_share: float = 0.5
    specialties: int = 40
    job_groups: int = 9
    moahels: int = 8

    def validate(self) -> None:
        for name in ("duplicate_rate", "blank_rate", "discrepancy_rate", "directed_share"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0,1], got {v}")
        if self.year_from > self.year_to:
            raise ConfigError(f"empty year range {self.year_from}:{self.year_to}")
        for name in ("sectors", "congresses_per_city", "districts_per_congress",
                     "specialties", "job_groups", "moahels"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.education_levels or not self.services:
            raise ConfigError("education_levels and services must be non-empty")
        if self.counts is not None and self.target_bytes is not None:
            raise ConfigError("give counts or target_bytes, not both")
        for given in (self.counts, self.target_bytes):
            if given is not None:
                unknown = set(given) - set(CITY_ORDER)
                if unknown:
                    raise ConfigError(f"unknown cities: {sorted(unknown)}")
                if set(given) != set(CITY_ORDER):
                    raise ConfigError(f"need entries for all of {CITY_ORDER}")
                if min(given.values()) < 1:
                    raise ConfigError("per-city values must be >= 1")


# ---------------------------------------------------------------------------
# City catalog: formats, layouts, schema mappings, wire encodings

CITY_ORDER = ("tripoli", "misurata", "sirte")
CITY_NAMES = {"tripoli": "Tripoli", "misurata": "Misurata", "sirte": "Sirte"}
CITY_PREFIX = {"tripoli": "TRI", "misurata": "MIS", "sirte": "SIR"}
CITY_FILES = {"tripoli": "tripoli.dat", "misurata": "misurata.csv", "sirte": "sirte.dbf"}

TRIPOLI_LAYOUT = (
    FieldDescriptor("ID_NO", "C", 12, 0),
    FieldDescriptor("FULL_NAME", "C", 20, 12),
    FieldDescriptor("SEX", "C", 6, 32),
    FieldDescriptor("DISTRICT", "C", 14, 38),
    FieldDescriptor("SPECIALTY", "C", 8, 52),
    FieldDescriptor("JOB_GROUP", "C", 6, 60),
    FieldDescriptor("SECTOR", "C", 8, 66),
    FieldDescriptor("MOAHEL", "C", 6, 74),
    FieldDescriptor("EDU_LEVEL", "C", 12, 80),
    FieldDescriptor("SVC_STATUS", "C", 10, 92),
    FieldDescriptor("APP_YEAR", "N", 4, 102),
    FieldDescriptor("APP_QTR", "C", 2, 106),
)

MISURATA_COLUMNS = ("nid", "full_name", "sex", "district", "mothamer", "specialty",
                    "job_group", "sector", "moahel", "edu_level", "svc_status",
                    "app_year", "app_qtr")

SIRTE_LAYOUT = (
    FieldDescriptor("NID", "C", 12, 0),
    FieldDescriptor("NAME", "C", 20, 12),
    FieldDescriptor("SEX", "C", 1, 32),
    FieldDescriptor("DISTRICT", "C", 14, 33),
    FieldDescriptor("SPEC", "C", 8, 47),
    FieldDescriptor("JOBGRP", "C", 6, 55),
    FieldDescriptor("SECTOR", "C", 8, 61),
    FieldDescriptor("MOAHEL", "C", 6, 69),
    FieldDescriptor("EDULVL", "C", 2, 75),
    FieldDescriptor("SERVICE", "C", 2, 77),
    FieldDescriptor("YEAR", "N", 4, 79),
    FieldDescriptor("QTR", "N", 1, 83),
    FieldDescriptor("APPDATE", "D", 8, 84),
)

_EDU_BY_INDEX = {str(i + 1): level for i, level in enumerate(EDUCATION_LEVELS)}
_EDU_BY_CODE = {f"E{i + 1}": level for i, level in enumerate(EDUCATION_LEVELS)}
_SVC_BY_INDEX = {str(i + 1): svc for i, svc in enumerate(SERVICES)}
_SVC_BY_CODE = {f"S{i + 1}": svc for i, svc in enumerate(SERVICES)}
_QTR_BY_INDEX = {str(i + 1): q for i, q in enumerate(QUARTERS)}

TRIPOLI_MAPPING = SchemaMapping(field_map={
    "national_id": "ID_NO", "name": "FULL_NAME", "sex": "SEX",
    "district": "DISTRICT", "specialty": "SPECIALTY", "job_group": "JOB_GROUP",
    "sector": "SECTOR", "moahel": "MOAHEL", "education_level": "EDU_LEVEL",
    "service_status": "SVC_STATUS", "year": "APP_YEAR", "quarter": "APP_QTR",
})

MISURATA_MAPPING = SchemaMapping(
    field_map={
        "national_id": "nid", "name": "full_name", "sex": "sex",
        "district": "district", "congress": "mothamer", "specialty": "specialty",
        "job_group": "job_group", "sector": "sector", "moahel": "moahel",
        "education_level": "edu_level", "service_status": "svc_status",
        "year": "app_year", "quarter": "app_qtr",
    },
    value_codebooks={
        "sex": {"1": "male", "2": "female"},
        "education_level": dict(_EDU_BY_INDEX),
        "service_status": dict(_SVC_BY_INDEX),
        "quarter": dict(_QTR_BY_INDEX),
    },
)

SIRTE_MAPPING = SchemaMapping(
    field_map={
        "national_id": "NID", "name": "NAME", "sex": "SEX",
        "district": "DISTRICT", "specialty": "SPEC", "job_group": "JOBGRP",
        "sector": "SECTOR", "moahel": "MOAHEL", "education_level": "EDULVL",
        "service_status": "SERVICE", "year": "YEAR", "quarter": "QTR",
    },
    value_codebooks={
        "sex": {"M": "male", "F": "female"},
        "education_level": dict(_EDU_BY_CODE),
        "service_status": dict(_SVC_BY_CODE),
        "quarter": dict(_QTR_BY_INDEX),
    },
)

# Variant spellings plantable as entry discrepancies, keyed by canonical
# value, constrained to each source's field widths. All of them differ from
# the canonical value even after trimming, and none collides with the codes a
# source's ingest codebook translates, so exactly one normalization rewrite
# happens per planted variant.
_WORD_VARIANTS = {
    "sex": {"male": ("MALE", "Male"), "female": ("FEMALE", "Female")},
    "education_level": {
        "primary": ("PRIMARY", "Primary"),
        "preparatory": ("PREPARATORY", "Prep"),
        "secondary": ("SECONDARY", "Sec"),
        "diploma": ("DIPLOMA", "Dipl"),
        "university": ("UNIVERSITY", "Univ"),
        "postgraduate": ("POSTGRADUATE", "PostGrad"),
    },
    "service_status": {
        "completed": ("COMPLETED", "Complete"),
        "exempt": ("EXEMPT", "Exempted"),
        "deferred": ("DEFERRED", "Defer"),
        "pending": ("PENDING", "Pend"),
    },
}
_SIRTE_VARIANTS = {
    "sex": {"male": ("m",), "female": ("f",)},
    "education_level": {level: (f"e{i + 1}",) for i, level in enumerate(EDUCATION_LEVELS)},
    "service_status": {svc: (f"s{i + 1}",) for i, svc in enumerate(SERVICES)},
}
VARIANT_POOLS = {"tripoli": _WORD_VARIANTS, "misurata": _WORD_VARIANTS,
                 "sirte": _SIRTE_VARIANTS}

BLANKABLE_FIELDS = ("district", "job_group", "moahel", "name", "sex", "specialty")
DISCREPANCY_FIELDS = ("education_level", "service_status", "sex")


def normalize_codebooks() -> dict[str, dict[str, str]]:
    """The variant-to-canonical books the cleaning stage needs, i.e. the union
    of every plantable spelling."""
    books: dict[str, dict[str, str]] = {}
    for pools in VARIANT_POOLS.values():
        for field_name, by_canonical in pools.items():
            book = books.setdefault(field_name, {})
            for canonical, variants in by_canonical.items():
                for v in variants:
                    book[v] = canonical
    return {name: dict(sorted(book.items())) for name, book in sorted(books.items())}


def build_source_specs() -> list[SourceSpec]:
    return [
        SourceSpec("tripoli", CITY_NAMES["tripoli"], "fixed_width",
                   CITY_FILES["tripoli"], TRIPOLI_MAPPING, layout=TRIPOLI_LAYOUT),
        SourceSpec("misurata", CITY_NAMES["misurata"], "delimited",
                   CITY_FILES["misurata"], MISURATA_MAPPING, encoding="utf-8"),
        SourceSpec("sirte", CITY_NAMES["sirte"], "dbf",
                   CITY_FILES["sirte"], SIRTE_MAPPING),
    ]


def build_hierarchy_tree(config: GenConfig) -> dict:
    """{city: {congress: [districts]}} covering every generated address."""
    tree: dict = {}
    for city_key in CITY_ORDER:
        prefix = CITY_PREFIX[city_key]
        congresses = {}
        for i in range(1, config.congresses_per_city + 1):
            cg = f"{prefix}-CG{i:02d}"
            congresses[cg] = [f"{cg}-D{j:02d}"
                              for j in range(1, config.districts_per_congress + 1)]
        tree[CITY_NAMES[city_key]] = congresses
    return tree


# ---------------------------------------------------------------------------
# Format writers (round-trip partners of the parsers)


def _fit(value: str, fd: FieldDescriptor, where: str) -> str:
    if len(value) > fd.length:
        raise FieldOverflow(f"{where}: {fd.name}={value!r} exceeds {fd.length} bytes")
    return value.ljust(fd.length) if fd.kind == "C" else value.rjust(fd.length)


def render_fixed_width(rows: Iterable[Mapping[str, str]],
                       layout: Sequence[FieldDescriptor]) -> bytes:
    lines = []
    for i, row in enumerate(rows):
        lines.append("".join(_fit(row.get(fd.name, ""), fd, f"row {i}")
                             for fd in layout))
        lines.append("\n")
    return "".join(lines).encode("ascii")


def write_fixed_width(rows: Iterable[Mapping[str, str]],
                      layout: Sequence[FieldDescriptor], path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(render_fixed_width(rows, layout))
    return path


def render_delimited(rows: Iterable[Mapping[str, str]], columns: Sequence[str],
                     delimiter: str = ",") -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row.get(c, "") for c in columns])
    return buf.getvalue().encode("utf-8")


def write_delimited(rows: Iterable[Mapping[str, str]], columns: Sequence[str],
                    path: str | Path, delimiter: str = ",") -> Path:
    path = Path(path)
    path.write_bytes(render_delimited(rows, columns, delimiter))
    return path


def render_dbf(rows: Sequence[Mapping[str, str]],
               layout: Sequence[FieldDescriptor],
               last_update: tuple[int, int, int] = (80, 1, 1)) -> bytes:
    """dBASE III bytes: 32-byte header, 32-byte descriptors, 0x0D, records,
    0x1A. Header arithmetic (counts and lengths) is what parsers verify."""
    for fd in layout:
        if len(fd.name) > 10:
            raise ConfigError(f"field name {fd.name!r} exceeds 10 bytes")
        if not 1 <= fd.length <= 255:
            raise ConfigError(f"field {fd.name!r}: bad length {fd.length}")
        if fd.kind not in "CND":
            raise ConfigError(f"field {fd.name!r}: bad kind {fd.kind!r}")

    record_len = 1 + sum(fd.length for fd in layout)
    header_len = 32 + 32 * len(layout) + 1
    out = bytearray()
    out.append(DBF_VERSION_BYTE)
    out.extend(bytes(b & 0xFF for b in last_update))
    out.extend(len(rows).to_bytes(4, "little"))
    out.extend(header_len.to_bytes(2, "little"))
    out.extend(record_len.to_bytes(2, "little"))
    out.extend(b"\x00" * 20)
    for fd in layout:
        desc = bytearray(32)
        desc[0:len(fd.name)] = fd.name.encode("ascii")
        desc[11] = ord(fd.kind)
        desc[16] = fd.length
        desc[17] = fd.decimals
        out.extend(desc)
    out.append(0x0D)
    for i, row in enumerate(rows):
        out.append(0x20)
        for fd in layout:
            out.extend(_fit(row.get(fd.name, ""), fd, f"record {i}").encode("ascii"))
    out.append(0x1A)
    return bytes(out)


def write_dbf(rows: Sequence[Mapping[str, str]], layout: Sequence[FieldDescriptor],
              path: str | Path,
              last_update: tuple[int, int, int] = (80, 1, 1)) -> Path:
    path = Path(path)
    path.write_bytes(render_dbf(rows, layout, last_update))
    return path


# ---------------------------------------------------------------------------
# Wire encoding of canonical records

_SEX_TO_MIS = {"male": "1", "female": "2"}
_SEX_TO_SIR = {"male": "M", "female": "F"}
_EDU_TO_INDEX = {level: str(i + 1) for i, level in enumerate(EDUCATION_LEVELS)}
_EDU_TO_CODE = {level: f"E{i + 1}" for i, level in enumerate(EDUCATION_LEVELS)}
_SVC_TO_INDEX = {svc: str(i + 1) for i, svc in enumerate(SERVICES)}
_SVC_TO_CODE = {svc: f"S{i + 1}" for i, svc in enumerate(SERVICES)}
_QTR_TO_INDEX = {q: str(i + 1) for i, q in enumerate(QUARTERS)}
_QTR_MONTH = {"Q1": "02", "Q2": "05", "Q3": "08", "Q4": "11"}


def _to_wire(city_key: str, r: CanonicalApplicant) -> dict[str, str]:
    if city_key == "tripoli":
        return {
            "ID_NO": r.national_id, "FULL_NAME": r.name, "SEX": r.sex,
            "DISTRICT": r.district, "SPECIALTY": r.specialty,
            "JOB_GROUP": r.job_group, "SECTOR": r.sector, "MOAHEL": r.moahel,
            "EDU_LEVEL": r.education_level, "SVC_STATUS": r.service_status,
            "APP_YEAR": str(r.year), "APP_QTR": r.quarter,
        }
    if city_key == "misurata":
        return {
            "nid": r.national_id, "full_name": r.name,
            "sex": _SEX_TO_MIS[r.sex], "district": r.district,
            "mothamer": r.congress, "specialty": r.specialty,
            "job_group": r.job_group, "sector": r.sector, "moahel": r.moahel,
            "edu_level": _EDU_TO_INDEX[r.education_level],
            "svc_status": _SVC_TO_INDEX[r.service_status],
            "app_year": str(r.year), "app_qtr": _QTR_TO_INDEX[r.quarter],
        }
    return {
        "NID": r.national_id, "NAME": r.name, "SEX": _SEX_TO_SIR[r.sex],
        "DISTRICT": r.district, "SPEC": r.specialty, "JOBGRP": r.job_group,
        "SECTOR": r.sector, "MOAHEL": r.moahel,
        "EDULVL": _EDU_TO_CODE[r.education_level],
        "SERVICE": _SVC_TO_CODE[r.service_status],
        "YEAR": str(r.year), "QTR": _QTR_TO_INDEX[r.quarter],
        "APPDATE": f"{r.year}{_QTR_MONTH[r.quarter]}15",
    }


_FIELD_MAPS = {"tripoli": TRIPOLI_MAPPING.field_map,
               "misurata": MISURATA_MAPPING.field_map,
               "sirte": SIRTE_MAPPING.field_map}


# ---------------------------------------------------------------------------
# Sizing


def _misurata_row_width(config: GenConfig) -> float:
    widths = {
        "nid": 12, "full_name": 17, "sex": 1, "district": 12, "mothamer": 8,
        "specialty": 7, "job_group": 5, "sector": 6 * config.directed_share,
        "moahel": 5, "edu_level": 1, "svc_status": 1, "app_year": 4, "app_qtr": 1,
    }
    return sum(widths.values()) + len(MISURATA_COLUMNS) - 1 + 1


def _city_row_width(config: GenConfig, city_key: str) -> float:
    if city_key == "tripoli":
        return sum(fd.length for fd in TRIPOLI_LAYOUT) + 1
    if city_key == "misurata":
        return _misurata_row_width(config)
    return 1 + sum(fd.length for fd in SIRTE_LAYOUT)


def _city_overhead(config: GenConfig, city_key: str) -> int:
    if city_key == "misurata":
        return len(",".join(MISURATA_COLUMNS)) + 1
    if city_key == "sirte":
        return 32 + 32 * len(SIRTE_LAYOUT) + 1 + 1   # header + terminator + EOF
    return 0


def _persons_from_targets(config: GenConfig) -> dict[str, int]:
    """Back out person counts from byte targets, correcting for the extra
    rows duplicate copies will add to each file."""
    base: dict[str, float] = {}
    for city_key in CITY_ORDER:
        target = config.target_bytes[city_key]
        width = _city_row_width(config, city_key)
        overhead = _city_overhead(config, city_key)
        if target < overhead + width:
            raise UnsatisfiableSize(
                f"{city_key}: {target} bytes cannot hold one {width:.0f}-byte record")
        base[city_key] = (target - overhead) / width
    counts: dict[str, int] = {}
    total = sum(base.values())
    for city_key in CITY_ORDER:
        # copies into this city come from donors elsewhere, half odds each
        copies_in = config.duplicate_rate * (total - base[city_key]) / 2.0
        counts[city_key] = max(1, round(base[city_key] - copies_in))
    return counts


# ---------------------------------------------------------------------------
# Generation


@dataclass
class GenExpectations:
    """What the cleaning stage must report when run over the emitted files."""

    persons: int = 0
    wire_rows: int = 0
    duplicates: int = 0
    filled: dict[str, int] = field(default_factory=dict)
    normalized: dict[str, int] = field(default_factory=dict)
    unknown_hierarchy: int = 0
    generalized: int = 0


@dataclass
class GenResult:
    out_dir: Path
    truth: list[CanonicalApplicant]
    files: dict[str, Path]
    expect: GenExpectations
    duplicates: list[tuple[str, str, str, str]]     # nid, donor city, copy city, copy time
    blanks: list[tuple[str, str, str]]              # city, nid, field
    discrepancies: list[tuple[str, str, str, str]]  # city, nid, field, planted value


def _previous_quarter(year: int, quarter: str) -> tuple[int, str]:
    qi = quarter_index(quarter)
    if qi > 1:
        return year, QUARTERS[qi - 2]
    return year - 1, QUARTERS[3]


def _make_person(rng: Rng, config: GenConfig, city_key: str, ordinal: int,
                 ) -> CanonicalApplicant:
    prefix = CITY_PREFIX[city_key]
    congress = f"{prefix}-CG{rng.randrange(config.congresses_per_city) + 1:02d}"
    district = f"{congress}-D{rng.randrange(config.districts_per_congress) + 1:02d}"
    sector = (f"SEC-{rng.randrange(config.sectors) + 1:02d}"
              if rng.random() < config.directed_share else "")
    return CanonicalApplicant(
        national_id=f"NID{ordinal:09d}",
        name=f"APPLICANT-{ordinal:07d}",
        sex=("male", "female")[rng.randrange(2)],
        district=district,
        congress=congress,
        city=CITY_NAMES[city_key],
        specialty=f"SPC-{rng.randrange(config.specialties) + 1:03d}",
        job_group=f"JG-{rng.randrange(config.job_groups) + 1:02d}",
        sector=sector,
        moahel=f"QL-{rng.randrange(config.moahels) + 1:02d}",
        education_level=config.education_levels[rng.randrange(len(config.education_levels))],
        service_status=config.services[rng.randrange(len(config.services))],
        status=derive_status(sector),
        year=config.year_from + rng.randrange(config.year_to - config.year_from + 1),
        quarter=QUARTERS[rng.randrange(4)],
        source_id=city_key,
    )


def _make_copy(rng: Rng, config: GenConfig, donor: CanonicalApplicant,
               copy_city: str) -> CanonicalApplicant:
    """The same applicant filed in another city, strictly one quarter before
    the donor application so the keep-latest rule always removes the copy."""
    prefix = CITY_PREFIX[copy_city]
    congress = f"{prefix}-CG{rng.randrange(config.congresses_per_city) + 1:02d}"
    district = f"{congress}-D{rng.randrange(config.districts_per_congress) + 1:02d}"
    sector = (f"SEC-{rng.randrange(config.sectors) + 1:02d}"
              if rng.random() < config.directed_share else "")
    year, quarter = _previous_quarter(donor.year, donor.quarter)
    return replace(
        donor,
        district=district,
        congress=congress,
        city=CITY_NAMES[copy_city],
        specialty=f"SPC-{rng.randrange(config.specialties) + 1:03d}",
        job_group=f"JG-{rng.randrange(config.job_groups) + 1:02d}",
        sector=sector,
        status=derive_status(sector),
        year=year,
        quarter=quarter,
        source_id=copy_city,
    )


def generate(config: GenConfig, out_dir: str | Path) -> GenResult:
    """Emit the three source files plus truth set, sidecar configs, and the
    planted-corruption manifest. Byte-deterministic for a given config."""
    config.validate()
    if len(set(config.education_levels)) != len(config.education_levels):
        raise ConfigError("duplicate education levels")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = Rng(config.seed)

    if config.target_bytes is not None:
        counts = _persons_from_targets(config)
    elif config.counts is not None:
        counts = dict(config.counts)
    else:
        counts = {"tripoli": 900, "misurata": 600, "sirte": 300}

    # Persons, one rng stream, fixed city order.
    persons: list[CanonicalApplicant] = []
    ordinal = 0
    for city_key in CITY_ORDER:
        for _ in range(counts[city_key]):
            ordinal += 1
            persons.append(_make_person(rng, config, city_key, ordinal))
    total_persons = len(persons)

    # Cross-city duplicate applications; copies always predate their donor.
    n_copies = int(config.duplicate_rate * total_persons)
    eligible = [p for p in persons
                if (p.year, quarter_index(p.quarter)) > (config.year_from, 1)]
    if not eligible:
        n_copies = 0
    duplicates: list[tuple[str, str, str, str]] = []
    wire: dict[str, list] = {c: [] for c in CITY_ORDER}
    for p in persons:
        wire[p.source_id].append([p, True])         # [record, is_person_row]
    for _ in range(n_copies):
        donor = eligible[rng.randrange(len(eligible))]
        others = [c for c in CITY_ORDER if c != donor.source_id]
        copy_city = others[rng.randrange(2)]
        copy = _make_copy(rng, config, donor, copy_city)
        wire[copy_city].append([copy, False])
        duplicates.append((donor.national_id, donor.source_id, copy_city,
                           f"{copy.year}{copy.quarter}"))

    for city_key in CITY_ORDER:
        rng.shuffle(wire[city_key])
    flat: list[list] = [entry for city_key in CITY_ORDER for entry in wire[city_key]]
    for entry in flat:
        entry.append({})    # corruption overlay: canonical field -> wire value

    expect = GenExpectations(persons=total_persons, wire_rows=len(flat),
                             duplicates=len(duplicates))

    # Blanks: at most one per row, only on fillable fields.
    n_blanks = int(config.blank_rate * len(flat))
    blank_rows = rng.sample(len(flat), n_blanks)
    blanks: list[tuple[str, str, str]] = []
    blanked_district_persons: set[str] = set()
    for row_idx in blank_rows:
        record, is_person, overlay = flat[row_idx]
        field_name = BLANKABLE_FIELDS[rng.randrange(len(BLANKABLE_FIELDS))]
        overlay[field_name] = ""
        expect.filled[field_name] = expect.filled.get(field_name, 0) + 1
        blanks.append((record.source_id, record.national_id, field_name))
        if field_name == "district" and is_person:
            blanked_district_persons.add(record.national_id)

    # Entry discrepancies: variant spellings that normalization must rewrite.
    n_disc = int(config.discrepancy_rate * len(flat))
    disc_rows = rng.sample(len(flat), n_disc)
    discrepancies: list[tuple[str, str, str, str]] = []
    for row_idx in disc_rows:
        record, _, overlay = flat[row_idx]
        candidates = [f for f in DISCREPANCY_FIELDS if f not in overlay]
        field_name = candidates[rng.randrange(len(candidates))]
        pool = VARIANT_POOLS[record.source_id][field_name][getattr(record, field_name)]
        variant = pool[rng.randrange(len(pool))]
        overlay[field_name] = variant
        expect.normalized[field_name] = expect.normalized.get(field_name, 0) + 1
        discrepancies.append((record.source_id, record.national_id,
                              field_name, variant))

    expect.unknown_hierarchy = len(blanked_district_persons)
    expect.generalized = total_persons - expect.unknown_hierarchy
    expect.filled = dict(sorted(expect.filled.items()))
    expect.normalized = dict(sorted(expect.normalized.items()))

    # Truth: what the pipeline should hand the warehouse, sorted by key.
    truth = []
    for p in persons:
        congress = "UNKNOWN" if p.national_id in blanked_district_persons else p.congress
        truth.append(project(replace(p, congress=congress),
                             WAREHOUSE_REQUIRED_FIELDS))
    truth.sort(key=lambda r: r.national_id)

    files = _write_outputs(config, out, wire, truth)
    _write_gen_manifest(out / GEN_MANIFEST_FILE, config, expect, files,
                        duplicates, blanks, discrepancies)
    files["gen_manifest"] = out / GEN_MANIFEST_FILE
    return GenResult(out, truth, files, expect, duplicates, blanks, discrepancies)


def _wire_dicts(city_key: str, entries: list) -> list[dict[str, str]]:
    field_map = _FIELD_MAPS[city_key]
    rows = []
    for record, _, overlay in entries:
        values = _to_wire(city_key, record)
        for canonical_field, planted in overlay.items():
            values[field_map[canonical_field]] = planted
        rows.append(values)
    return rows


def _write_outputs(config: GenConfig, out: Path, wire: dict[str, list],
                   truth: list[CanonicalApplicant]) -> dict[str, Path]:
    import yaml

    files: dict[str, Path] = {}
    last_update = (max(0, config.year_to - 1900) & 0xFF, 12, 28)
    for city_key in CITY_ORDER:
        rows = _wire_dicts(city_key, wire[city_key])
        path = out / CITY_FILES[city_key]
        if city_key == "tripoli":
            write_fixed_width(rows, TRIPOLI_LAYOUT, path)
        elif city_key == "misurata":
            write_delimited(rows, MISURATA_COLUMNS, path)
        else:
            write_dbf(rows, SIRTE_LAYOUT, path, last_update)
        files[city_key] = path

    truth_path = out / TRUTH_FILE
    write_records_csv(truth, truth_path)
    files["truth"] = truth_path

    specs = []
    for spec in build_source_specs():
        entry: dict = {
            "source_id": spec.source_id, "city": spec.city, "format": spec.format,
            "path": spec.path, "encoding": spec.encoding,
            "field_map": dict(spec.mapping.field_map),
        }
        if spec.mapping.value_codebooks:
            entry["value_codebooks"] = {k: dict(v) for k, v in
                                        spec.mapping.value_codebooks.items()}
        if spec.format == "delimited":
            entry["delimiter"] = spec.delimiter
        if spec.layout:
            entry["layout"] = [
                {"name": fd.name, "kind": fd.kind, "length": fd.length,
                 "offset": fd.offset} for fd in spec.layout]
        specs.append(entry)
    (out / SOURCES_FILE).write_text(
        yaml.safe_dump({"sources": specs}, sort_keys=True), encoding="utf-8")
    files["sources"] = out / SOURCES_FILE

    hierarchy = {"levels": ["district", "congress", "city"],
                 "tree": build_hierarchy_tree(config)}
    (out / HIERARCHY_FILE).write_text(
        yaml.safe_dump(hierarchy, sort_keys=True), encoding="utf-8")
    files["hierarchy"] = out / HIERARCHY_FILE

    (out / CODEBOOKS_FILE).write_text(
        yaml.safe_dump(normalize_codebooks(), sort_keys=True), encoding="utf-8")
    files["codebooks"] = out / CODEBOOKS_FILE
    return files


def _write_gen_manifest(path: Path, config: GenConfig, expect: GenExpectations,
                        files: dict[str, Path],
                        duplicates: list, blanks: list, discrepancies: list) -> None:
    lines = [
        f"seed={config.seed}",
        f"persons={expect.persons}",
        f"wire_rows={expect.wire_rows}",
        f"duplicates_planted={expect.duplicates}",
        f"blanks_planted={sum(expect.filled.values())}",
        f"discrepancies_planted={sum(expect.normalized.values())}",
        f"expected_duplicates_removed={expect.duplicates}",
        f"expected_unknown_hierarchy={expect.unknown_hierarchy}",
        f"expected_generalized={expect.generalized}",
        "expected_unmatched=0",
    ]
    for field_name, count in expect.filled.items():
        lines.append(f"expected_filled.{field_name}={count}")
    for field_name, count in expect.normalized.items():
        lines.append(f"expected_normalized.{field_name}={count}")
    for city_key in CITY_ORDER:
        lines.append(f"bytes.{city_key}={files[city_key].stat().st_size}")
    lines.append("[duplicates]")
    lines.extend(f"{nid} donor={dc} copy={cc} copy_time={ct}"
                 for nid, dc, cc, ct in duplicates)
    lines.append("[blanks]")
    lines.extend(f"{nid} city={city} field={field_name}"
                 for city, nid, field_name in blanks)
    lines.append("[discrepancies]")
    lines.extend(f"{nid} city={city} field={field_name} value={value}"
                 for city, nid, field_name, value in discrepancies)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_gen_manifest(path: str | Path) -> dict:
    """Scalar and per-field expectations from a generation manifest."""
    out: dict = {"expected_filled": {}, "expected_normalized": {}, "bytes": {}}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("[") or "=" not in line or " " in line.split("=", 1)[0]:
            continue
        key, _, value = line.partition("=")
        if key.startswith("expected_filled."):
            out["expected_filled"][key.split(".", 1)[1]] = int(value)
        elif key.startswith("expected_normalized."):
            out["expected_normalized"][key.split(".", 1)[1]] = int(value)
        elif key.startswith("bytes."):
            out["bytes"][key.split(".", 1)[1]] = int(value)
        elif value.lstrip("-").isdigit():
            out[key] = int(value)
        else:
            out[key] = value
    return out
