"""Exception types raised across the toolkit, one class per contract error."""

from __future__ import annotations


class JobcubeError(Exception):
    """Base class for all toolkit errors."""


# --- source parsing ---------------------------------------------------------

class MalformedHeader(JobcubeError):
    """DBF header is internally inconsistent or not a supported dBASE III file."""


class TruncatedFile(JobcubeError):
    """File body is shorter than its header claims."""


class UnsupportedFieldType(JobcubeError):
    """DBF field descriptor declares a type outside C/N/D."""


class ShortLine(JobcubeError):
    """Fixed-width line is shorter than the layout extent."""

    def __init__(self, line_no: int, got: int, need: int):
        super().__init__(f"line {line_no}: {got} bytes, layout needs {need}")
        self.line_no = line_no


class DecodeError(JobcubeError):
    """Raw bytes do not decode under the source's declared encoding."""


class RaggedRow(JobcubeError):
    """Delimited row has a different field count than the header/first row."""

    def __init__(self, row_no: int, got: int, want: int):
        super().__init__(f"row {row_no}: {got} fields, expected {want}")
        self.row_no = row_no


class MissingMandatoryField(JobcubeError):
    """Record lacks a source field mapped to a mandatory canonical field."""


class InvalidFieldValue(JobcubeError):
    """A mandatory canonical field holds a value outside its domain."""


# --- preprocessing ----------------------------------------------------------

class BadLevelPair(JobcubeError):
    """from_level is not strictly below to_level in the concept hierarchy."""


class MissingRequiredField(JobcubeError):
    """Projection would drop a field the warehouse (or dedup) still needs."""


class BadHierarchy(JobcubeError):
    """Concept hierarchy violates its tree/forest invariants."""


class BadPolicy(JobcubeError):
    """Cleaning policy fills a forbidden field or misses a nullable one."""


# --- warehouse --------------------------------------------------------------

class EmptyYearRange(JobcubeError):
    """Configured year range is empty (year_from > year_to)."""


class UnresolvedDimensionValue(JobcubeError):
    """Record attribute has no matching dimension row (pipeline bug)."""


class CorruptManifest(JobcubeError):
    """Persisted warehouse fails its manifest checksum/row-count check."""


# --- cube -------------------------------------------------------------------

class BadLevel(JobcubeError):
    """Requested hierarchy level is not reachable from the cube's level."""


class UnknownMember(JobcubeError):
    """Member is not on the named axis."""


class EmptyMemberSet(JobcubeError):
    """Dice filter carries an empty member set."""


class BadQuery(JobcubeError):
    """Aggregate query references unknown dimensions, levels or measures."""


# --- generation / benchmark -------------------------------------------------

class FieldOverflow(JobcubeError):
    """Value is longer than the declared field length."""


class UnsatisfiableSize(JobcubeError):
    """Target byte size is too small to hold even one record."""


class AnswerMismatch(JobcubeError):
    """Scan baseline and cube disagree on a benchmarked query."""


class ConfigError(JobcubeError):
    """Pipeline config file is missing, malformed or references absent files."""
