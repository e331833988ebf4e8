"""One YAML file drives the whole pipeline.

Top-level keys: seed, data_dir, warehouse_dir, years, gen, etl, reports,
bench, plus optional overrides for the sidecar files (sources_file,
hierarchy_file, codebooks_file, staging_file, clean_file). Relative paths
are taken as written, i.e. resolved against the working directory of the
invoking process. Everything is validated up front; stages only check that
their input files exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .bench import BenchConfig
from .cube import AggregateQuery, MEASURES
from .datagen import GenConfig
from .errors import ConfigError
from .preprocess import CleaningPolicy, ConceptHierarchy
from .records import NULLABLE_FIELDS
from .reporting import ReportSpec
from .sources import FieldDescriptor, SchemaMapping, SourceSpec

DEFAULT_BENCH_OUTPUT = "reports/bench_report.csv"


def _read_yaml(path: str | Path):
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: {exc.strerror or exc}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: not valid YAML: {exc}") from exc


def _check_keys(mapping: Mapping, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(map(str, unknown))}")


def _as_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ConfigError(f"{where}: expected a mapping, got {type(value).__name__}")
    return dict(value)


def parse_query(raw: Mapping, where: str = "query") -> AggregateQuery:
    """{measure, group_by: [dim | {dimension, level}], filters: [{dimension,
    level?, members}]} -> AggregateQuery."""
    raw = _as_mapping(raw, where)
    _check_keys(raw, {"measure", "group_by", "filters"}, where)
    measure = str(raw.get("measure", "total"))
    if measure not in MEASURES:
        raise ConfigError(f"{where}: unknown measure {measure!r}")
    group_by = []
    for entry in raw.get("group_by") or []:
        if isinstance(entry, Mapping):
            _check_keys(entry, {"dimension", "level"}, f"{where}.group_by")
            if "dimension" not in entry:
                raise ConfigError(f"{where}.group_by: entry needs a dimension")
            if "level" in entry:
                group_by.append((str(entry["dimension"]), str(entry["level"])))
            else:
                group_by.append(str(entry["dimension"]))
        else:
            group_by.append(str(entry))
    filters = []
    for entry in raw.get("filters") or []:
        entry = _as_mapping(entry, f"{where}.filters")
        _check_keys(entry, {"dimension", "level", "members"}, f"{where}.filters")
        if "dimension" not in entry or "members" not in entry:
            raise ConfigError(f"{where}.filters: entry needs dimension and members")
        members = entry["members"]
        if not isinstance(members, Sequence) or isinstance(members, str):
            raise ConfigError(f"{where}.filters: members must be a list")
        members = tuple(str(m) for m in members)
        if "level" in entry:
            filters.append((str(entry["dimension"]), str(entry["level"]), members))
        else:
            filters.append((str(entry["dimension"]), members))
    return AggregateQuery(measure, tuple(group_by), tuple(filters))


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 20060814
    data_dir: Path = Path("data")
    warehouse_dir: Path = Path("warehouse")
    year_from: int = 2000
    year_to: int = 2006
    gen: GenConfig = field(default_factory=GenConfig)
    fill_constant: str = "UNKNOWN"
    keep_rule: str = "latest_application"
    reports: tuple[ReportSpec, ...] = ()
    bench_queries: tuple[tuple[str, AggregateQuery], ...] = ()
    bench_repetitions: int = 10
    bench_warmup: int = 2
    bench_output: str = DEFAULT_BENCH_OUTPUT
    sources_file: Path | None = None
    hierarchy_file: Path | None = None
    codebooks_file: Path | None = None
    staging_file: Path | None = None
    clean_file: Path | None = None

    def validate(self) -> None:
        if self.year_from > self.year_to:
            raise ConfigError(f"empty year range {self.year_from}:{self.year_to}")
        if not self.fill_constant:
            raise ConfigError("fill_constant must be non-empty")
        self.gen.validate()
        self.policy().validate()
        for spec in self.reports:
            spec.validate()
        self.bench_config().validate()

    def policy(self) -> CleaningPolicy:
        fills = {name: self.fill_constant for name in sorted(NULLABLE_FIELDS)}
        return CleaningPolicy(fill_constants=fills, keep_rule=self.keep_rule)

    def bench_config(self) -> BenchConfig:
        queries = self.bench_queries or (
            ("seekers_by_sector",
             AggregateQuery(measure="seekers", group_by=("sector",))),
        )
        return BenchConfig(queries=queries, repetitions=self.bench_repetitions,
                           warmup=self.bench_warmup)

    # sidecar paths default to files the generator writes into data_dir
    def sources_path(self) -> Path:
        return self.sources_file or self.data_dir / "sources.yaml"

    def hierarchy_path(self) -> Path:
        return self.hierarchy_file or self.data_dir / "hierarchy.yaml"

    def codebooks_path(self) -> Path:
        return self.codebooks_file or self.data_dir / "codebooks.yaml"

    def staging_path(self) -> Path:
        return self.staging_file or self.data_dir / "staging.csv"

    def clean_path(self) -> Path:
        return self.clean_file or self.data_dir / "clean.csv"


_TOP_KEYS = {"seed", "data_dir", "warehouse_dir", "years", "gen", "etl",
             "reports", "bench", "sources_file", "hierarchy_file",
             "codebooks_file", "staging_file", "clean_file"}
_GEN_KEYS = {"counts", "target_bytes", "duplicate_rate", "blank_rate",
             "discrepancy_rate", "sectors", "congresses_per_city",
             "districts_per_congress", "education_levels", "services",
             "directed_share", "specialties", "job_groups", "moahels"}
_ETL_KEYS = {"fill_constant", "keep_rule"}
_BENCH_KEYS = {"repetitions", "warmup", "output", "queries"}
_REPORT_KEYS = {"kind", "years", "city", "output", "format", "query"}


def _parse_years(raw, where: str, default: tuple[int, int]) -> tuple[int, int]:
    if raw is None:
        return default
    if isinstance(raw, Mapping):
        _check_keys(raw, {"from", "to"}, where)
        try:
            return int(raw["from"]), int(raw["to"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"{where}: need integer 'from' and 'to'") from None
    if isinstance(raw, str) and raw.count(":") == 1:
        lo, _, hi = raw.partition(":")
        try:
            return int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"{where}: bad year range {raw!r}") from None
    raise ConfigError(f"{where}: expected {{from, to}} or 'A:B', got {raw!r}")


def _int_counts(raw, where: str) -> dict[str, int] | None:
    if raw is None:
        return None
    raw = _as_mapping(raw, where)
    try:
        return {str(k): int(v) for k, v in raw.items()}
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: values must be integers") from None


def _build_gen(raw: Mapping, seed: int, years: tuple[int, int],
               where: str) -> GenConfig:
    _check_keys(raw, _GEN_KEYS, where)
    kwargs: dict = {"seed": seed, "year_from": years[0], "year_to": years[1]}
    kwargs["counts"] = _int_counts(raw.get("counts"), f"{where}.counts")
    kwargs["target_bytes"] = _int_counts(raw.get("target_bytes"),
                                         f"{where}.target_bytes")
    for name in ("duplicate_rate", "blank_rate", "discrepancy_rate",
                 "directed_share"):
        if name in raw:
            try:
                kwargs[name] = float(raw[name])
            except (TypeError, ValueError):
                raise ConfigError(f"{where}.{name}: expected a number") from None
    for name in ("sectors", "congresses_per_city", "districts_per_congress",
                 "specialties", "job_groups", "moahels"):
        if name in raw:
            try:
                kwargs[name] = int(raw[name])
            except (TypeError, ValueError):
                raise ConfigError(f"{where}.{name}: expected an integer") from None
    for name in ("education_levels", "services"):
        if name in raw:
            values = raw[name]
            if not isinstance(values, Sequence) or isinstance(values, str):
                raise ConfigError(f"{where}.{name}: expected a list")
            kwargs[name] = tuple(str(v) for v in values)
    return GenConfig(**kwargs)


def _build_reports(raw, years: tuple[int, int], where: str,
                   ) -> tuple[ReportSpec, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, Sequence) or isinstance(raw, str):
        raise ConfigError(f"{where}: expected a list of report entries")
    specs = []
    for i, entry in enumerate(raw):
        entry_where = f"{where}[{i}]"
        entry = _as_mapping(entry, entry_where)
        _check_keys(entry, _REPORT_KEYS, entry_where)
        if "kind" not in entry:
            raise ConfigError(f"{entry_where}: report needs a kind")
        y_from, y_to = _parse_years(entry.get("years"), f"{entry_where}.years",
                                    years)
        city = entry.get("city")
        city_filter = None
        if city is not None:
            members = [city] if isinstance(city, str) else list(city)
            city_filter = frozenset(str(m) for m in members)
        query = None
        if "query" in entry:
            query = parse_query(entry["query"], f"{entry_where}.query")
        specs.append(ReportSpec(
            kind=str(entry["kind"]), year_from=y_from, year_to=y_to,
            city_filter=city_filter, output=str(entry.get("output", "")),
            format=str(entry.get("format", "csv")), query=query))
    return tuple(specs)


def load_config(path: str | Path) -> PipelineConfig:
    where = str(path)
    raw = _as_mapping(_read_yaml(path), where)
    _check_keys(raw, _TOP_KEYS, where)

    try:
        seed = int(raw.get("seed", PipelineConfig.seed))
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: seed must be an integer") from None
    years = _parse_years(raw.get("years"), f"{where}.years", (2000, 2006))
    gen = _build_gen(_as_mapping(raw.get("gen"), f"{where}.gen"), seed, years,
                     f"{where}.gen")
    etl = _as_mapping(raw.get("etl"), f"{where}.etl")
    _check_keys(etl, _ETL_KEYS, f"{where}.etl")
    bench = _as_mapping(raw.get("bench"), f"{where}.bench")
    _check_keys(bench, _BENCH_KEYS, f"{where}.bench")
    bench_queries = []
    for i, entry in enumerate(bench.get("queries") or []):
        entry_where = f"{where}.bench.queries[{i}]"
        entry = _as_mapping(entry, entry_where)
        if "id" not in entry:
            raise ConfigError(f"{entry_where}: query needs an id")
        bench_queries.append((str(entry["id"]),
                              parse_query({k: v for k, v in entry.items()
                                           if k != "id"}, entry_where)))

    def path_or_none(key: str) -> Path | None:
        return Path(str(raw[key])) if key in raw else None

    config = PipelineConfig(
        seed=seed,
        data_dir=Path(str(raw.get("data_dir", "data"))),
        warehouse_dir=Path(str(raw.get("warehouse_dir", "warehouse"))),
        year_from=years[0],
        year_to=years[1],
        gen=gen,
        fill_constant=str(etl.get("fill_constant", "UNKNOWN")),
        keep_rule=str(etl.get("keep_rule", "latest_application")),
        reports=_build_reports(raw.get("reports"), years, f"{where}.reports"),
        bench_queries=tuple(bench_queries),
        bench_repetitions=int(bench.get("repetitions", 10)),
        bench_warmup=int(bench.get("warmup", 2)),
        bench_output=str(bench.get("output", DEFAULT_BENCH_OUTPUT)),
        sources_file=path_or_none("sources_file"),
        hierarchy_file=path_or_none("hierarchy_file"),
        codebooks_file=path_or_none("codebooks_file"),
        staging_file=path_or_none("staging_file"),
        clean_file=path_or_none("clean_file"),
    )
    config.validate()
    return config


def load_sources(path: str | Path) -> list[SourceSpec]:
    """Source catalog from YAML: formats, layouts, field maps, codebooks."""
    where = str(path)
    raw = _as_mapping(_read_yaml(path), where)
    _check_keys(raw, {"sources"}, where)
    entries = raw.get("sources")
    if not isinstance(entries, Sequence) or isinstance(entries, str):
        raise ConfigError(f"{where}: 'sources' must be a list")
    specs = []
    for i, entry in enumerate(entries):
        entry_where = f"{where}.sources[{i}]"
        entry = _as_mapping(entry, entry_where)
        _check_keys(entry, {"source_id", "city", "format", "path", "encoding",
                            "delimiter", "field_map", "value_codebooks",
                            "layout"}, entry_where)
        for required in ("source_id", "city", "format", "path", "field_map"):
            if required not in entry:
                raise ConfigError(f"{entry_where}: missing {required!r}")
        field_map = {str(k): str(v) for k, v in
                     _as_mapping(entry["field_map"], f"{entry_where}.field_map").items()}
        codebooks = {
            str(field_name): {str(code): str(value) for code, value in
                              _as_mapping(book, f"{entry_where}.value_codebooks").items()}
            for field_name, book in
            _as_mapping(entry.get("value_codebooks"),
                        f"{entry_where}.value_codebooks").items()}
        layout = []
        for j, fd in enumerate(entry.get("layout") or []):
            fd = _as_mapping(fd, f"{entry_where}.layout[{j}]")
            _check_keys(fd, {"name", "kind", "length", "offset", "decimals"},
                        f"{entry_where}.layout[{j}]")
            try:
                layout.append(FieldDescriptor(
                    name=str(fd["name"]), kind=str(fd["kind"]),
                    length=int(fd["length"]), offset=int(fd.get("offset", 0)),
                    decimals=int(fd.get("decimals", 0))))
            except (KeyError, TypeError, ValueError):
                raise ConfigError(
                    f"{entry_where}.layout[{j}]: needs name, kind, length") from None
        mapping = SchemaMapping(field_map=field_map, value_codebooks=codebooks)
        mapping.require_mandatory()
        spec = SourceSpec(
            source_id=str(entry["source_id"]), city=str(entry["city"]),
            format=str(entry["format"]), path=str(entry["path"]),
            mapping=mapping, encoding=str(entry.get("encoding", "ascii")),
            delimiter=str(entry.get("delimiter", ",")), layout=tuple(layout))
        spec.validate()
        specs.append(spec)
    if not specs:
        raise ConfigError(f"{where}: no sources defined")
    return specs


def load_hierarchy(path: str | Path) -> ConceptHierarchy:
    where = str(path)
    raw = _as_mapping(_read_yaml(path), where)
    _check_keys(raw, {"levels", "tree"}, where)
    levels = raw.get("levels")
    if not isinstance(levels, Sequence) or isinstance(levels, str) or not levels:
        raise ConfigError(f"{where}: 'levels' must be a list of level names")
    tree = _as_mapping(raw.get("tree"), f"{where}.tree")
    hierarchy = ConceptHierarchy.from_tree([str(lv) for lv in levels], tree)
    hierarchy.validate()
    return hierarchy


def load_codebooks(path: str | Path) -> dict[str, dict[str, str]]:
    where = str(path)
    raw = _as_mapping(_read_yaml(path), where)
    books = {}
    for field_name, book in raw.items():
        books[str(field_name)] = {str(k): str(v) for k, v in
                                  _as_mapping(book, f"{where}.{field_name}").items()}
    return books
