"""Multidimensional cube over the fact table, with roll-up, drill-down,
slice, dice, and general aggregate queries.

Cells are stored sparsely as coordinate tuples of member labels; an absent
cell is zero. Cube objects are immutable: every operation returns a new cube
and never mutates its input, so cubes are safe to share between readers.

Aggregate queries run on cached numpy code arrays (one integer column per
axis plus one column per measure); grouping and filtering become bincount
passes over those columns. Sums stay well below 2**53, so float64 bincount
weights are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BadLevel, BadQuery, EmptyMemberSet, UnknownMember
from .records import DIMENSIONS
from .warehouse import StarSchema

MEASURES = ("total", "seekers", "directed")

# Hierarchy levels per dimension, base level first. Flat dimensions have a
# single level named after the dimension itself.
LEVELS: dict[str, tuple[str, ...]] = {
    "time": ("quarter", "year"),
    "congress": ("congress", "city"),
}


def level_path(dimension: str) -> tuple[str, ...]:
    return LEVELS.get(dimension, (dimension,))


def base_level(dimension: str) -> str:
    return level_path(dimension)[0]


@dataclass(frozen=True)
class CubeAxis:
    dimension: str
    level: str
    members: tuple[str, ...]    # distinct, sorted


@dataclass(frozen=True)
class AggregateQuery:
    """measure: one of total/seekers/directed.

    group_by entries: "dim" (base level) or (dim, level).
    filters: (dim, members) at the axis's current level, or (dim, level, members).
    """

    measure: str = "total"
    group_by: tuple = ()
    filters: tuple = ()


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]     # (*group labels, measure value)


@dataclass(frozen=True, eq=False)
class Cube:
    axes: tuple[CubeAxis, ...]
    cells: dict[tuple[str, ...], tuple[int, int, int]]
    # member -> parent one level up, per dimension that still has a level above
    parents: dict[str, dict[str, str]]
    _arrays: dict = field(default_factory=dict, repr=False, compare=False)

    def axis_index(self, dimension: str) -> int:
        for i, ax in enumerate(self.axes):
            if ax.dimension == dimension:
                return i
        raise BadQuery(f"no axis for dimension {dimension!r}")

    def axis(self, dimension: str) -> CubeAxis:
        return self.axes[self.axis_index(dimension)]

    def mass(self) -> tuple[int, int, int]:
        t = s = d = 0
        for mt, ms, md in self.cells.values():
            t += mt
            s += ms
            d += md
        return t, s, d


def build_cube(schema: StarSchema) -> Cube:
    """Base-grain cube: Time at quarter level, Address at congress level."""
    axes = []
    parents: dict[str, dict[str, str]] = {}
    for dim in DIMENSIONS:
        table = schema.dimensions[dim]
        members = tuple(sorted(r.natural_key for r in table.rows))
        axes.append(CubeAxis(dim, base_level(dim), members))
        if dim == "time":
            parents[dim] = {r.natural_key: r.attributes["year"] for r in table.rows}
        elif dim == "congress":
            parents[dim] = {r.natural_key: r.attributes.get("city", r.natural_key)
                            for r in table.rows}
    key_of = {dim: {r.surrogate_id: r.natural_key
                    for r in schema.dimensions[dim].rows} for dim in DIMENSIONS}
    cells = {
        tuple(key_of[dim][sid] for dim, sid in zip(DIMENSIONS, f.key())): f.measures()
        for f in schema.facts
    }
    return Cube(tuple(axes), cells, parents)


# ---------------------------------------------------------------------------
# Cube algebra


def _level_distance(dimension: str, from_level: str, to_level: str) -> int:
    path = level_path(dimension)
    if from_level not in path or to_level not in path:
        raise BadLevel(f"{dimension}: levels are {path}, got {from_level!r} -> {to_level!r}")
    return path.index(to_level) - path.index(from_level)


def rollup(cube: Cube, dimension: str, to_level: str) -> Cube:
    """Regroup one axis at a coarser level; measure mass is conserved."""
    idx = cube.axis_index(dimension)
    ax = cube.axes[idx]
    if _level_distance(dimension, ax.level, to_level) < 1:
        raise BadLevel(f"{dimension}: {to_level!r} is not above {ax.level!r}")
    parent = cube.parents.get(dimension)
    if parent is None:
        raise BadLevel(f"{dimension}: no level above {ax.level!r}")

    cells: dict[tuple[str, ...], list[int]] = {}
    for coord, (t, s, d) in cube.cells.items():
        up = coord[:idx] + (parent[coord[idx]],) + coord[idx + 1:]
        cell = cells.setdefault(up, [0, 0, 0])
        cell[0] += t
        cell[1] += s
        cell[2] += d

    members = tuple(sorted({parent[m] for m in ax.members}))
    axes = (cube.axes[:idx] + (CubeAxis(dimension, to_level, members),)
            + cube.axes[idx + 1:])
    new_parents = {d_: p for d_, p in cube.parents.items() if d_ != dimension}
    return Cube(axes, {k: tuple(v) for k, v in cells.items()}, new_parents)


def drilldown(cube: Cube, base: Cube, dimension: str, to_level: str) -> Cube:
    """Finer view of one axis, re-aggregated from the retained base cube.

    drilldown(rollup(c, d, L), base=c, d, base_level) == c.
    """
    current = cube.axis(dimension).level
    base_lvl = base.axis(dimension).level
    if _level_distance(dimension, to_level, current) < 1:
        raise BadLevel(f"{dimension}: {to_level!r} is not below {current!r}")
    steps_up = _level_distance(dimension, base_lvl, to_level)
    if steps_up < 0:
        raise BadLevel(f"{dimension}: {to_level!r} is below the base grain {base_lvl!r}")
    if steps_up == 0:
        return base
    return rollup(base, dimension, to_level)


def slice_cube(cube: Cube, dimension: str, member: str) -> Cube:
    """Fix one dimension to a single member and drop that axis."""
    idx = cube.axis_index(dimension)
    if member not in cube.axes[idx].members:
        raise UnknownMember(f"{dimension}: no member {member!r}")
    cells = {
        coord[:idx] + coord[idx + 1:]: measures
        for coord, measures in cube.cells.items()
        if coord[idx] == member
    }
    axes = cube.axes[:idx] + cube.axes[idx + 1:]
    parents = {d_: p for d_, p in cube.parents.items() if d_ != dimension}
    return Cube(axes, cells, parents)


def dice(cube: Cube, filters: Iterable[tuple[str, Iterable[str]]]) -> Cube:
    """Restrict axes to member sets; the axes all survive."""
    wanted: dict[int, frozenset[str]] = {}
    for dimension, members in filters:
        idx = cube.axis_index(dimension)
        members = frozenset(members)
        if not members:
            raise EmptyMemberSet(f"{dimension}: empty member set")
        unknown = members - set(cube.axes[idx].members)
        if unknown:
            raise UnknownMember(f"{dimension}: no members {sorted(unknown)}")
        if idx in wanted:
            members = wanted[idx] & members
            if not members:
                raise EmptyMemberSet(f"{dimension}: filters intersect to nothing")
        wanted[idx] = members

    cells = {
        coord: measures
        for coord, measures in cube.cells.items()
        if all(coord[i] in members for i, members in wanted.items())
    }
    axes = tuple(
        CubeAxis(ax.dimension, ax.level, tuple(sorted(wanted[i])))
        if i in wanted else ax
        for i, ax in enumerate(cube.axes))
    return Cube(axes, cells, dict(cube.parents))


# ---------------------------------------------------------------------------
# Aggregate queries


def _ensure_arrays(cube: Cube) -> dict:
    cache = cube._arrays
    if "codes" not in cache:
        index = [{m: i for i, m in enumerate(ax.members)} for ax in cube.axes]
        n = len(cube.cells)
        codes = [np.empty(n, dtype=np.int64) for _ in cube.axes]
        measures = {name: np.empty(n, dtype=np.int64) for name in MEASURES}
        for row, (coord, (t, s, d)) in enumerate(cube.cells.items()):
            for a, member in enumerate(coord):
                codes[a][row] = index[a][member]
            measures["total"][row] = t
            measures["seekers"][row] = s
            measures["directed"][row] = d
        cache["index"] = index
        cache["codes"] = codes
        cache["measures"] = measures
    return cache


def _labels_at_level(cube: Cube, axis_idx: int, level: str) -> list[str]:
    """Per-member label at the requested level (identity at the axis level)."""
    ax = cube.axes[axis_idx]
    steps = _level_distance(ax.dimension, ax.level, level)
    if steps < 0:
        raise BadLevel(f"{ax.dimension}: {level!r} is below the cube grain {ax.level!r}")
    labels = list(ax.members)
    if steps == 0:
        return labels
    parent = cube.parents.get(ax.dimension)
    if parent is None or steps > 1:
        raise BadLevel(f"{ax.dimension}: cannot reach level {level!r} from {ax.level!r}")
    return [parent[m] for m in labels]


def _normalize_query(cube: Cube, query: AggregateQuery):
    if query.measure not in MEASURES:
        raise BadQuery(f"unknown measure {query.measure!r}")
    group_by: list[tuple[str, str]] = []
    for entry in query.group_by:
        if isinstance(entry, str):
            dimension, level = entry, None
        else:
            dimension, level = entry
        ax = cube.axis(dimension)
        group_by.append((dimension, level or ax.level))
    if len({d for d, _ in group_by}) != len(group_by):
        raise BadQuery("duplicate group-by dimension")
    filters: list[tuple[str, str, frozenset[str]]] = []
    for entry in query.filters:
        if len(entry) == 2:
            dimension, members = entry
            level = cube.axis(dimension).level
        else:
            dimension, level, members = entry
        filters.append((dimension, level, frozenset(members)))
    return group_by, filters


def aggregate(cube: Cube, query: AggregateQuery) -> ResultTable:
    """Filter, group, and sum one measure.

    Row order is sorted by group labels. With an empty group_by the result is
    a single grand-total row (zero when nothing matches).
    """
    group_by, filters = _normalize_query(cube, query)
    arrays = _ensure_arrays(cube)
    codes, measures = arrays["codes"], arrays["measures"]
    n = len(cube.cells)

    mask = np.ones(n, dtype=bool)
    for dimension, level, members in filters:
        idx = cube.axis_index(dimension)
        if not members:
            raise EmptyMemberSet(f"{dimension}: empty member set")
        labels = _labels_at_level(cube, idx, level)
        unknown = members - set(labels)
        if unknown:
            raise UnknownMember(f"{dimension}@{level}: no members {sorted(unknown)}")
        allowed = np.array([lab in members for lab in labels], dtype=bool)
        if n:
            mask &= allowed[codes[idx]]

    group_sizes: list[int] = []
    group_labels: list[list[str]] = []
    combined = np.zeros(n, dtype=np.int64)
    for dimension, level in group_by:
        idx = cube.axis_index(dimension)
        labels = _labels_at_level(cube, idx, level)
        distinct = sorted(set(labels))
        code_of = {lab: i for i, lab in enumerate(distinct)}
        member_to_group = np.array([code_of[lab] for lab in labels], dtype=np.int64)
        if n:
            combined = combined * len(distinct) + member_to_group[codes[idx]]
        group_sizes.append(len(distinct))
        group_labels.append(distinct)

    columns = tuple(
        (dimension if level == base_level(dimension) else f"{dimension}_{level}")
        for dimension, level in group_by) + (query.measure,)

    slots = 1
    for size in group_sizes:
        slots *= size
    values = measures[query.measure]
    if n:
        occupancy = np.bincount(combined[mask], minlength=slots)
        sums = np.bincount(combined[mask],
                           weights=values[mask].astype(np.float64),
                           minlength=slots)
    else:
        occupancy = np.zeros(slots, dtype=np.int64)
        sums = np.zeros(slots, dtype=np.float64)

    rows: list[tuple] = []
    if not group_by:
        rows.append((int(sums[0]),))
    else:
        for flat in np.nonzero(occupancy)[0]:
            labels_out = []
            rem = int(flat)
            for size, labels in zip(reversed(group_sizes), reversed(group_labels)):
                rem, pos = divmod(rem, size)
                labels_out.append(labels[pos])
            labels_out.reverse()
            rows.append((*labels_out, int(sums[flat])))
    return ResultTable(columns, tuple(rows))
