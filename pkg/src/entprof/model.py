"""Data model and CSV I/O for records, queries, sources and ground truth.

A dataset is a flat relational table of records, each published by exactly
one source, plus partially filled queries and optional ground-truth
completed tuples keyed by query id. All value tuples align positionally
with a shared schema. Missing cells are represented as ``None`` and are
distinct from empty-string text.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

TEXT = "text"
NUMERIC = "numeric"
ATTRIBUTE_KINDS = (TEXT, NUMERIC)

# A cell value: text, finite number, or missing.
Value = str | float | None


class ParseError(ValueError):
    """A file could not be parsed into the data model."""


class ValidationError(ValueError):
    """Parsed or constructed data violates a model invariant."""


@dataclass(frozen=True)
class Schema:
    """Ordered attribute layout shared by records, queries and truth rows."""

    attributes: tuple

    def __post_init__(self):
        attrs = tuple((str(n), str(k)) for n, k in self.attributes)
        object.__setattr__(self, "attributes", attrs)
        seen = set()
        for name, kind in attrs:
            if not name:
                raise ValidationError("attribute names must be non-empty")
            if name in seen:
                raise ValidationError(f"duplicate attribute name: {name!r}")
            if kind not in ATTRIBUTE_KINDS:
                raise ValidationError(f"unknown attribute kind: {kind!r}")
            seen.add(name)

    def __len__(self):
        return len(self.attributes)

    @property
    def names(self):
        return tuple(name for name, _ in self.attributes)

    @property
    def kinds(self):
        return tuple(kind for _, kind in self.attributes)

    def index(self, name):
        return self.names.index(name)


@dataclass
class Record:
    """One source's attribute-value tuple describing an entity."""

    record_id: str
    source_id: str
    values: list
    entity_id: str | None = None


@dataclass
class Query:
    """A partially filled profile to be completed."""

    query_id: str
    values: list
    entity_id: str | None = None

    def missing_count(self):
        return sum(1 for v in self.values if v is None)


@dataclass
class Source:
    """A publisher of records."""

    source_id: str
    record_ids: list


@dataclass
class Dataset:
    """Records grouped by source, plus queries and ground truth."""

    schema: Schema
    records: list = field(default_factory=list)
    sources: list = field(default_factory=list)
    queries: list = field(default_factory=list)
    truth: dict = field(default_factory=dict)

    def source_order(self):
        return [s.source_id for s in self.sources]

    def records_by_source(self):
        by_id = {r.record_id: r for r in self.records}
        return {s.source_id: [by_id[rid] for rid in s.record_ids] for s in self.sources}


def _parse_cell(cell, kind, line_no, column):
    if cell == "":
        return None
    if kind == NUMERIC:
        try:
            value = float(cell)
        except ValueError:
            raise ParseError(
                f"line {line_no}, column {column!r}: non-numeric value {cell!r}"
            ) from None
        if not math.isfinite(value):
            raise ParseError(f"line {line_no}, column {column!r}: non-finite value {cell!r}")
        return value
    return cell


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise ParseError(f"{path}: empty file, expected a header row")
    return rows


def _header_indices(header, required, optional, schema, path):
    known = list(required) + list(optional) + list(schema.names)
    for column in header:
        if column not in known:
            raise ParseError(f"{path}: unknown column {column!r} in header")
    if len(set(header)) != len(header):
        raise ParseError(f"{path}: duplicate column in header")
    for column in required:
        if column not in header:
            raise ParseError(f"{path}: missing required column {column!r}")
    for name in schema.names:
        if name not in header:
            raise ParseError(f"{path}: missing schema attribute column {name!r}")
    return {column: header.index(column) for column in header}


def load_schema(path):
    """Read a schema spec file with one ``name:kind`` line per attribute."""
    pairs = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError(f"{path}: line {line_no}: expected 'name:kind'")
        name, _, kind = line.partition(":")
        pairs.append((name.strip(), kind.strip()))
    if not pairs:
        raise ParseError(f"{path}: schema spec has no attributes")
    return Schema(tuple(pairs))


def load_dataset(records_path, schema):
    """Load a records CSV into a Dataset fragment (records plus sources).

    Sources are derived by grouping rows on the ``source`` column, in order
    of first appearance. Empty cells become missing values.
    """
    rows = _read_rows(records_path)
    header = rows[0]
    idx = _header_indices(header, ["record_id", "source"], ["entity_id"], schema, records_path)
    has_entity = "entity_id" in idx

    records = []
    seen_ids = set()
    groups = {}
    for offset, row in enumerate(rows[1:]):
        line_no = offset + 2
        if len(row) != len(header):
            raise ParseError(
                f"{records_path}: line {line_no}: expected {len(header)} cells, got {len(row)}"
            )
        record_id = row[idx["record_id"]]
        if not record_id:
            raise ValidationError(f"{records_path}: line {line_no}: blank record_id")
        if record_id in seen_ids:
            raise ValidationError(f"{records_path}: line {line_no}: duplicate record_id {record_id!r}")
        seen_ids.add(record_id)
        source_id = row[idx["source"]]
        if not source_id:
            raise ValidationError(f"{records_path}: line {line_no}: blank source for {record_id!r}")
        entity_id = row[idx["entity_id"]] if has_entity else ""
        values = [
            _parse_cell(row[idx[name]], kind, line_no, name)
            for name, kind in schema.attributes
        ]
        records.append(Record(record_id, source_id, values, entity_id or None))
        groups.setdefault(source_id, []).append(record_id)

    sources = [Source(source_id, record_ids) for source_id, record_ids in groups.items()]
    return Dataset(schema=schema, records=records, sources=sources)


def load_queries(queries_path, schema):
    """Load a queries CSV; every query must have at least one filled cell."""
    rows = _read_rows(queries_path)
    header = rows[0]
    idx = _header_indices(header, ["query_id"], ["entity_id"], schema, queries_path)
    has_entity = "entity_id" in idx

    queries = []
    seen_ids = set()
    for offset, row in enumerate(rows[1:]):
        line_no = offset + 2
        if len(row) != len(header):
            raise ParseError(
                f"{queries_path}: line {line_no}: expected {len(header)} cells, got {len(row)}"
            )
        query_id = row[idx["query_id"]]
        if not query_id:
            raise ValidationError(f"{queries_path}: line {line_no}: blank query_id")
        if query_id in seen_ids:
            raise ValidationError(f"{queries_path}: line {line_no}: duplicate query_id {query_id!r}")
        seen_ids.add(query_id)
        entity_id = row[idx["entity_id"]] if has_entity else ""
        values = [
            _parse_cell(row[idx[name]], kind, line_no, name)
            for name, kind in schema.attributes
        ]
        if all(v is None for v in values):
            raise ValidationError(f"{queries_path}: line {line_no}: query {query_id!r} is all-missing")
        queries.append(Query(query_id, values, entity_id or None))
    return queries


def load_truth(truth_path, schema):
    """Load ground-truth completed tuples keyed by query id."""
    rows = _read_rows(truth_path)
    header = rows[0]
    idx = _header_indices(header, ["query_id"], [], schema, truth_path)

    truth = {}
    for offset, row in enumerate(rows[1:]):
        line_no = offset + 2
        if len(row) != len(header):
            raise ParseError(
                f"{truth_path}: line {line_no}: expected {len(header)} cells, got {len(row)}"
            )
        query_id = row[idx["query_id"]]
        if not query_id:
            raise ValidationError(f"{truth_path}: line {line_no}: blank query_id")
        if query_id in truth:
            raise ValidationError(f"{truth_path}: line {line_no}: duplicate query_id {query_id!r}")
        truth[query_id] = [
            _parse_cell(row[idx[name]], kind, line_no, name)
            for name, kind in schema.attributes
        ]
    return truth


def _check_values(values, schema, label, violations):
    if len(values) != len(schema):
        violations.append(f"{label}: expected {len(schema)} values, got {len(values)}")
        return
    for i, (value, (name, kind)) in enumerate(zip(values, schema.attributes)):
        if value is None:
            continue
        if kind == NUMERIC:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                violations.append(f"{label}: column {name!r}: non-numeric value {value!r}")
            elif not math.isfinite(value):
                violations.append(f"{label}: column {name!r}: non-finite value {value!r}")
        else:
            if not isinstance(value, str):
                violations.append(f"{label}: column {name!r}: non-text value {value!r}")


def validate(dataset):
    """Check every model invariant; returns a list of violations (empty = valid)."""
    violations = []
    schema = dataset.schema

    seen_records = set()
    source_ids = {s.source_id for s in dataset.sources}
    for record in dataset.records:
        if record.record_id in seen_records:
            violations.append(f"record {record.record_id!r}: duplicate record_id")
        seen_records.add(record.record_id)
        if record.source_id not in source_ids:
            violations.append(f"record {record.record_id!r}: unknown source {record.source_id!r}")
        _check_values(record.values, schema, f"record {record.record_id!r}", violations)

    claimed = {}
    for source in dataset.sources:
        if not source.record_ids:
            violations.append(f"source {source.source_id!r}: no records")
        for record_id in source.record_ids:
            if record_id not in seen_records:
                violations.append(
                    f"source {source.source_id!r}: unknown record {record_id!r}"
                )
            elif record_id in claimed:
                violations.append(
                    f"record {record_id!r}: listed by both {claimed[record_id]!r} "
                    f"and {source.source_id!r}"
                )
            claimed[record_id] = source.source_id
    for record in dataset.records:
        if record.record_id not in claimed and record.source_id in source_ids:
            violations.append(f"record {record.record_id!r}: not listed by its source")

    seen_queries = set()
    for query in dataset.queries:
        if query.query_id in seen_queries:
            violations.append(f"query {query.query_id!r}: duplicate query_id")
        seen_queries.add(query.query_id)
        if all(v is None for v in query.values):
            violations.append(f"query {query.query_id!r}: all values missing")
        _check_values(query.values, schema, f"query {query.query_id!r}", violations)

    for query_id, values in dataset.truth.items():
        if query_id not in seen_queries:
            violations.append(f"truth {query_id!r}: no matching query")
        _check_values(values, schema, f"truth {query_id!r}", violations)

    return violations


def format_value(value):
    """Render a cell for CSV output; missing becomes the empty cell."""
    if value is None:
        return ""
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def write_records_csv(dataset, path):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["record_id", "source", "entity_id", *dataset.schema.names])
        for record in dataset.records:
            writer.writerow(
                [record.record_id, record.source_id, record.entity_id or ""]
                + [format_value(v) for v in record.values]
            )


def write_queries_csv(queries, schema, path):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["query_id", "entity_id", *schema.names])
        for query in queries:
            writer.writerow(
                [query.query_id, query.entity_id or ""]
                + [format_value(v) for v in query.values]
            )


def write_truth_csv(truth, schema, path):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["query_id", *schema.names])
        for query_id, values in truth.items():
            writer.writerow([query_id] + [format_value(v) for v in values])
