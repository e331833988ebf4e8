"""Row-scan versus cube timing harness.

The baseline answers each query with a full pass over the canonical records,
the way the pre-warehouse systems produced reports. Correctness comes first:
every query's two answers are compared before any timing, and a mismatch
aborts the run.
"""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .cube import (
    AggregateQuery,
    Cube,
    ResultTable,
    aggregate,
    base_level,
    level_path,
)
from .errors import AnswerMismatch, BadLevel, BadQuery, ConfigError
from .records import (
    DIMENSIONS,
    STATUS_SEEKER,
    CanonicalApplicant,
    dimension_value,
)


def _record_label(record: CanonicalApplicant, dimension: str, level: str,
                  congress_parent: Mapping[str, str] | None) -> str:
    """The record's member label on a dimension at the requested level."""
    if level == base_level(dimension):
        return dimension_value(record, dimension)
    if dimension == "time" and level == "year":
        return str(record.year)
    if dimension == "congress" and level == "city":
        value = record.congress
        if congress_parent is None:
            return value
        return congress_parent.get(value, value)
    raise BadLevel(f"{dimension}: unknown level {level!r}")


def _normalize(query: AggregateQuery) -> tuple[list, list]:
    if query.measure not in ("total", "seekers", "directed"):
        raise BadQuery(f"unknown measure {query.measure!r}")
    group_by = []
    for entry in query.group_by:
        dimension, level = (entry, None) if isinstance(entry, str) else entry
        if dimension not in DIMENSIONS:
            raise BadQuery(f"unknown dimension {dimension!r}")
        if level is not None and level not in level_path(dimension):
            raise BadLevel(f"{dimension}: unknown level {level!r}")
        group_by.append((dimension, level or base_level(dimension)))
    filters = []
    for entry in query.filters:
        if len(entry) == 2:
            dimension, members = entry
            level = base_level(dimension)
        else:
            dimension, level, members = entry
        if dimension not in DIMENSIONS:
            raise BadQuery(f"unknown dimension {dimension!r}")
        filters.append((dimension, level, frozenset(members)))
    return group_by, filters


def run_scan_query(records: Sequence[CanonicalApplicant], query: AggregateQuery,
                   congress_parent: Mapping[str, str] | None = None,
                   ) -> ResultTable:
    """Answer the query by scanning every record; no pre-aggregation.

    congress_parent carries the warehouse's congress-to-city assignment so a
    city-level grouping agrees with the cube; without it a congress is its
    own city-level ancestor. Membership of filter values is not validated
    here: a member nothing matches simply contributes nothing.
    """
    group_by, filters = _normalize(query)
    measure = query.measure
    groups: dict[tuple[str, ...], int] = {}
    for r in records:
        keep = True
        for dimension, level, members in filters:
            if _record_label(r, dimension, level, congress_parent) not in members:
                keep = False
                break
        if not keep:
            continue
        if measure == "seekers":
            value = 1 if r.status == STATUS_SEEKER else 0
        elif measure == "directed":
            value = 0 if r.status == STATUS_SEEKER else 1
        else:
            value = 1
        key = tuple(_record_label(r, dimension, level, congress_parent)
                    for dimension, level in group_by)
        groups[key] = groups.get(key, 0) + value

    columns = tuple(
        (dimension if level == base_level(dimension) else f"{dimension}_{level}")
        for dimension, level in group_by) + (measure,)
    if not group_by:
        return ResultTable(columns, ((groups.get((), 0),),))
    rows = tuple((*key, groups[key]) for key in sorted(groups))
    return ResultTable(columns, rows)


@dataclass(frozen=True)
class BenchConfig:
    queries: tuple[tuple[str, AggregateQuery], ...]     # (query id, query)
    repetitions: int = 10
    warmup: int = 2

    def validate(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.warmup < 0:
            raise ConfigError("warmup must be >= 0")
        if not self.queries:
            raise ConfigError("no queries to benchmark")


@dataclass(frozen=True)
class QueryTiming:
    query_id: str
    scan_mean: float
    scan_median: float
    scan_stddev: float
    cube_mean: float
    cube_median: float
    cube_stddev: float
    speedup: float              # scan_median / cube_median
    answers_equal: bool


@dataclass(frozen=True)
class BenchResult:
    timings: tuple[QueryTiming, ...]


def _time_repeated(fn, repetitions: int) -> list[float]:
    times = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return times


def run_benchmark(records: Sequence[CanonicalApplicant], cube: Cube,
                  config: BenchConfig,
                  congress_parent: Mapping[str, str] | None = None,
                  ) -> BenchResult:
    """Time each query both ways after verifying the answers agree.

    Raises AnswerMismatch if any query's scan and cube answers differ; a
    benchmark of wrong answers is worthless.
    """
    config.validate()
    timings = []
    for query_id, query in config.queries:
        scan_answer = run_scan_query(records, query, congress_parent)
        cube_answer = aggregate(cube, query)
        if scan_answer != cube_answer:
            raise AnswerMismatch(f"query {query_id!r}: scan and cube answers differ")
        for _ in range(config.warmup):
            run_scan_query(records, query, congress_parent)
            aggregate(cube, query)
        scan_times = _time_repeated(
            lambda: run_scan_query(records, query, congress_parent),
            config.repetitions)
        cube_times = _time_repeated(lambda: aggregate(cube, query),
                                    config.repetitions)
        scan_median = statistics.median(scan_times)
        cube_median = statistics.median(cube_times)
        timings.append(QueryTiming(
            query_id=query_id,
            scan_mean=statistics.fmean(scan_times),
            scan_median=scan_median,
            scan_stddev=statistics.pstdev(scan_times),
            cube_mean=statistics.fmean(cube_times),
            cube_median=cube_median,
            cube_stddev=statistics.pstdev(cube_times),
            speedup=scan_median / max(cube_median, 1e-9),
            answers_equal=True,
        ))
    return BenchResult(tuple(timings))


def write_bench_report(result: BenchResult, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("query_id", "scan_median_s", "cube_median_s",
                         "speedup", "answers_equal"))
        for t in result.timings:
            writer.writerow((t.query_id, f"{t.scan_median:.6f}",
                             f"{t.cube_median:.6f}", f"{t.speedup:.2f}",
                             str(t.answers_equal).lower()))
    return path


def summary_lines(result: BenchResult) -> list[str]:
    lines = []
    for t in result.timings:
        lines.append(
            f"{t.query_id}: scan median {t.scan_median * 1000:.2f} ms, "
            f"cube median {t.cube_median * 1000:.2f} ms, "
            f"speedup {t.speedup:.1f}x")
    return lines
