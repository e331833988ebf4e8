"""Command-line driver: gen | ingest | etl | load | refresh | query | report
| bench | validate.

One YAML config drives everything; flags only pick the subcommand, the
config path, and query parameters. Stages hand artifacts to each other as
files: gen writes the raw sources plus sidecar configs into data_dir,
ingest writes staging.csv, etl writes clean.csv, load/refresh maintain the
warehouse directory. Exit codes: 0 success, 1 usage or config error,
2 data error (quarantine files written where applicable), 3 warehouse
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from . import bench as bench_mod
from . import datagen
from .config import PipelineConfig, load_codebooks, load_config, load_hierarchy, load_sources
from .cube import AggregateQuery, Cube, ResultTable, aggregate, build_cube
from .errors import (
    AnswerMismatch,
    BadHierarchy,
    BadLevel,
    BadLevelPair,
    BadPolicy,
    BadQuery,
    ConfigError,
    CorruptManifest,
    EmptyMemberSet,
    EmptyYearRange,
    JobcubeError,
    UnknownMember,
)
from .preprocess import run_pipeline
from .records import read_records_csv, write_records_csv
from .reporting import render_text_table, run_report, write_result
from .sources import ingest_sources
from .warehouse import StarSchema, build_schema, check_integrity, load_schema, persist, refresh

USAGE_ERRORS = (ConfigError, BadPolicy, BadHierarchy, BadLevelPair, BadQuery,
                BadLevel, UnknownMember, EmptyMemberSet, EmptyYearRange)
INVARIANT_ERRORS = (CorruptManifest,)

INGEST_REJECTS = "ingest_rejects.csv"
ETL_REJECTS = "rejects.csv"


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _fail_usage(message: str) -> int:
    _say(f"error: {message}")
    return 1


@contextmanager
def _locked(warehouse_dir: Path):
    """Advisory lock: one process per warehouse directory."""
    warehouse_dir.mkdir(parents=True, exist_ok=True)
    lock = warehouse_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(f"{lock}: warehouse is locked by another process "
                          "(remove the file if that process is gone)") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode("ascii"))
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _require_file(path: Path, hint: str) -> None:
    if not path.exists():
        raise ConfigError(f"{path}: not found; run `{hint}` first")


def _print_table(table: ResultTable, format: str, stream) -> None:
    if format == "table":
        stream.write(render_text_table(table))
        return
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(table.columns)
    writer.writerows(table.rows)


def _congress_city_map(schema: StarSchema) -> dict[str, str]:
    rows = schema.dimensions["congress"].rows
    return {r.natural_key: r.attributes.get("city", r.natural_key) for r in rows}


def _loaded_cube(config: PipelineConfig) -> tuple[StarSchema, Cube]:
    _require_file(Path(config.warehouse_dir) / "manifest.txt", "jobcube load")
    schema = load_schema(config.warehouse_dir)
    return schema, build_cube(schema)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen(config: PipelineConfig, args: argparse.Namespace) -> int:
    result = datagen.generate(config.gen, config.data_dir)
    _say(f"[gen] persons={result.expect.persons} wire_rows={result.expect.wire_rows} "
         f"duplicates={result.expect.duplicates} "
         f"blanks={sum(result.expect.filled.values())} "
         f"discrepancies={sum(result.expect.normalized.values())}")
    for city in datagen.CITY_ORDER:
        path = result.files[city]
        _say(f"[gen] {path} ({path.stat().st_size} bytes)")
    _say(f"[gen] truth={result.files['truth']}")
    return 0


def cmd_ingest(config: PipelineConfig, args: argparse.Namespace) -> int:
    specs = load_sources(config.sources_path())
    for spec in specs:
        _require_file(Path(config.data_dir) / spec.path, "jobcube gen")
    records, report = ingest_sources(specs, config.data_dir)
    for line in report.summary_lines():
        _say(f"[ingest] {line}")

    staging = config.staging_path()
    written = write_records_csv(records, staging)
    _say(f"[ingest] staged {written} records -> {staging}")

    rejects_path = Path(config.data_dir) / INGEST_REJECTS
    if report.rejects:
        with open(rejects_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("source_id", "row_no", "reason"))
            for reject in report.rejects:
                writer.writerow((reject.source_id, reject.row_no, reject.reason))
        _say(f"[ingest] {len(report.rejects)} rejected rows -> {rejects_path}")
        return 2
    rejects_path.unlink(missing_ok=True)
    return 0


def cmd_etl(config: PipelineConfig, args: argparse.Namespace) -> int:
    staging = config.staging_path()
    _require_file(staging, "jobcube ingest")
    records = read_records_csv(staging)
    codebooks = load_codebooks(config.codebooks_path())
    hierarchy = load_hierarchy(config.hierarchy_path())
    cleaned, report = run_pipeline(records, codebooks=codebooks,
                                   policy=config.policy(), hierarchy=hierarchy)
    for line in report.summary_lines():
        _say(f"[etl] {line}")

    clean = config.clean_path()
    written = write_records_csv(cleaned, clean)
    _say(f"[etl] {len(records)} in, {written} out -> {clean}")

    rejects_path = Path(config.data_dir) / ETL_REJECTS
    if report.rejected:
        write_records_csv(report.rejected, rejects_path)
        _say(f"[etl] {len(report.rejected)} quarantined records -> {rejects_path}")
        return 2
    rejects_path.unlink(missing_ok=True)
    return 0


def cmd_load(config: PipelineConfig, args: argparse.Namespace) -> int:
    clean = config.clean_path()
    _require_file(clean, "jobcube etl")
    records = read_records_csv(clean)
    hierarchy = load_hierarchy(config.hierarchy_path())
    schema = build_schema(records, (config.year_from, config.year_to), hierarchy)
    issues = check_integrity(schema)
    if issues:
        for issue in issues:
            _say(f"[load] invariant violation: {issue}")
        return 3
    with _locked(Path(config.warehouse_dir)):
        manifest = persist(schema, config.warehouse_dir)
    for dim, table in sorted(schema.dimensions.items()):
        _say(f"[load] dim_{dim}: {len(table)} rows")
    _say(f"[load] fact: {len(schema.facts)} rows from {len(records)} records")
    _say(f"[load] manifest -> {manifest}")
    return 0


def cmd_refresh(config: PipelineConfig, args: argparse.Namespace) -> int:
    _require_file(Path(config.warehouse_dir) / "manifest.txt", "jobcube load")
    clean = config.clean_path()
    _require_file(clean, "jobcube etl")
    records = read_records_csv(clean)
    hierarchy = load_hierarchy(config.hierarchy_path())
    schema = load_schema(config.warehouse_dir)
    before = {dim: len(table) for dim, table in schema.dimensions.items()}
    refreshed = refresh(schema, records, hierarchy)
    issues = check_integrity(refreshed)
    if issues:
        for issue in issues:
            _say(f"[refresh] invariant violation: {issue}")
        return 3
    with _locked(Path(config.warehouse_dir)):
        manifest = persist(refreshed, config.warehouse_dir)
    for dim, table in sorted(refreshed.dimensions.items()):
        grown = len(table) - before[dim]
        suffix = f" (+{grown})" if grown else ""
        _say(f"[refresh] dim_{dim}: {len(table)} rows{suffix}")
    _say(f"[refresh] fact: {len(refreshed.facts)} rows from {len(records)} records")
    _say(f"[refresh] manifest -> {manifest}")
    return 0


def _parse_group_by(raw: str | None) -> tuple:
    if not raw:
        return ()
    entries = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            dim, _, level = item.partition(":")
            entries.append((dim.strip(), level.strip()))
        else:
            entries.append(item)
    return tuple(entries)


def _parse_filters(raw_filters: list[str], years: str | None) -> tuple:
    filters = []
    if years:
        lo, sep, hi = years.partition(":")
        try:
            lo_year, hi_year = int(lo), int(hi if sep else lo)
        except ValueError:
            raise ConfigError(f"--years: bad range {years!r}") from None
        if lo_year > hi_year:
            raise ConfigError(f"--years: empty range {years!r}")
        members = tuple(str(y) for y in range(lo_year, hi_year + 1))
        filters.append(("time", "year", members))
    for raw in raw_filters:
        target, eq, members_raw = raw.partition("=")
        if not eq or not members_raw:
            raise ConfigError(f"--filter: expected dim[:level]=m1,m2 got {raw!r}")
        members = tuple(m for m in (s.strip() for s in members_raw.split(",")) if m)
        if not members:
            raise ConfigError(f"--filter: no members in {raw!r}")
        if ":" in target:
            dim, _, level = target.partition(":")
            filters.append((dim.strip(), level.strip(), members))
        else:
            filters.append((target.strip(), members))
    return tuple(filters)


def cmd_query(config: PipelineConfig, args: argparse.Namespace) -> int:
    _, cube = _loaded_cube(config)
    query = AggregateQuery(measure=args.measure,
                           group_by=_parse_group_by(args.group_by),
                           filters=_parse_filters(args.filter, args.years))
    started = time.perf_counter()
    table = aggregate(cube, query)
    elapsed = time.perf_counter() - started
    if args.output:
        write_result(table, args.output, args.format)
        _say(f"[query] {len(table.rows)} rows -> {args.output}")
    else:
        _print_table(table, args.format, sys.stdout)
    _say(f"[query] answered in {elapsed * 1000:.2f} ms")
    return 0


def cmd_report(config: PipelineConfig, args: argparse.Namespace) -> int:
    if not config.reports:
        _say("[report] no reports configured")
        return 0
    _, cube = _loaded_cube(config)
    for spec in config.reports:
        table = run_report(cube, spec)
        target = spec.output or "(stdout)"
        _say(f"[report] {spec.kind}: {len(table.rows)} rows -> {target}")
        if not spec.output:
            _print_table(table, "csv" if spec.format == "csv" else "table",
                         sys.stdout)
    return 0


def cmd_bench(config: PipelineConfig, args: argparse.Namespace) -> int:
    clean = config.clean_path()
    _require_file(clean, "jobcube etl")
    records = read_records_csv(clean)
    schema, cube = _loaded_cube(config)
    result = bench_mod.run_benchmark(records, cube, config.bench_config(),
                                     congress_parent=_congress_city_map(schema))
    for line in bench_mod.summary_lines(result):
        _say(f"[bench] {line}")
    path = bench_mod.write_bench_report(result, config.bench_output)
    _say(f"[bench] report -> {path}")
    return 0


def cmd_validate(config: PipelineConfig, args: argparse.Namespace) -> int:
    _require_file(Path(config.warehouse_dir) / "manifest.txt", "jobcube load")
    schema = load_schema(config.warehouse_dir)
    issues = check_integrity(schema)
    if issues:
        for issue in issues:
            _say(f"[validate] violation: {issue}")
        return 3
    total_rows = sum(len(t) for t in schema.dimensions.values())
    _say(f"[validate] warehouse ok: {len(schema.dimensions)} dimension tables "
         f"({total_rows} rows), {len(schema.facts)} fact rows")
    return 0


_COMMANDS = {
    "gen": cmd_gen,
    "ingest": cmd_ingest,
    "etl": cmd_etl,
    "load": cmd_load,
    "refresh": cmd_refresh,
    "query": cmd_query,
    "report": cmd_report,
    "bench": cmd_bench,
    "validate": cmd_validate,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jobcube",
        description="Employment-agency warehouse pipeline: generate sources, "
                    "ingest, clean, load a star schema, query the cube.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", default="jobcube.yaml",
                       help="pipeline config file (default: %(default)s)")
        return p

    command("gen", "generate the three synthetic city sources")
    command("ingest", "parse all sources into canonical staging records")
    command("etl", "clean, deduplicate, generalize, and reduce staged records")
    command("load", "build the star schema and persist the warehouse")
    command("refresh", "fold the current clean records into an existing warehouse")
    query = command("query", "run one aggregate query against the cube")
    query.add_argument("--measure", default="total",
                       choices=("total", "seekers", "directed"))
    query.add_argument("--group-by", default="",
                       help="comma list of dimensions, dim or dim:level")
    query.add_argument("--years", default=None, help="year filter, e.g. 2000:2006")
    query.add_argument("--filter", action="append", default=[],
                       metavar="DIM[:LEVEL]=M1,M2",
                       help="restrict a dimension to members (repeatable)")
    query.add_argument("--format", default="csv", choices=("csv", "table"))
    query.add_argument("--output", default="", help="write result to this file")
    command("report", "run every report configured in the pipeline config")
    command("bench", "time configured queries, cube versus full record scan")
    command("validate", "check warehouse invariants; exit 3 on violation")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        return _fail_usage(str(exc))
    try:
        code = _COMMANDS[args.command](config, args)
    except USAGE_ERRORS as exc:
        return _fail_usage(str(exc))
    except INVARIANT_ERRORS as exc:
        _say(f"error: {exc}")
        return 3
    except AnswerMismatch as exc:
        _say(f"error: {exc}")
        return 2
    except JobcubeError as exc:
        _say(f"error: {exc}")
        return 2
    except OSError as exc:
        _say(f"error: {exc}")
        return 2
    _say(f"[{args.command}] done in {time.perf_counter() - started:.2f}s")
    return code


if __name__ == "__main__":
    sys.exit(main())
