"""Profile completion: classifier-driven resolution, then rated value selection.

For each query, associated records are those the classifier accepts. Every
attribute the query leaves blank is then filled from the associated records'
distinct values, ranked by the product of three terms: similarity of the
candidate's source to the top-rated source, similarity to the query value,
and frequency times summed similarity to sibling candidates. Values the
query already supplies are kept as given (user queries are assumed
accurate).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from entprof.classify import extract_features
from entprof.model import format_value
from entprof.similarity import DEFAULT_CONFIG, TextSimilarityCache


@dataclass
class ValueEntry:
    """One distinct candidate value with its record frequency and sources."""

    value: object
    frequency: int
    source_ids: list


@dataclass
class AttributeValueSet:
    """Distinct non-missing values an attribute takes across associated records."""

    attribute: int
    entries: list

    def __len__(self):
        return len(self.entries)

    def values(self):
        return [entry.value for entry in self.entries]


@dataclass
class CandidateTrace:
    """Scoring components for one candidate value at one attribute."""

    value: object
    source_id: str
    query_similarity: float  # S
    frequency: int  # F
    sibling_similarity: float  # T
    source_link: float  # V1
    sim_freq_product: float  # V2 = S*F*T
    score: float  # V3 = V1*V2


@dataclass
class SelectionTrace:
    attribute: int
    rule: str  # "query" | "singleton" | "product" | "empty"
    chosen: object
    candidates: list = field(default_factory=list)


@dataclass
class CompletedProfile:
    query_id: str
    values: list
    associated_record_ids: list
    traces: list
    complete: bool


def resolve(query, dataset, model, trust, config=DEFAULT_CONFIG, store=None, cache=None):
    """Associate records with a query: every record the classifier accepts.

    ``trust`` maps source ids to trustworthiness. Returns record ids in
    dataset order; the set may be empty.
    """
    if cache is None:
        cache = TextSimilarityCache(config, store)
    features = [
        extract_features(query, record, trust[record.source_id], dataset.schema, config, store, cache)
        for record in dataset.records
    ]
    scores = model.predict_scores(np.asarray(features, dtype=float))
    return [
        record.record_id
        for record, score in zip(dataset.records, scores)
        if score >= 0.5
    ]


def build_attribute_value_sets(records, schema):
    """Collect distinct non-missing values per attribute with frequencies."""
    sets = []
    for i in range(len(schema)):
        entries = []
        index = {}
        for record in records:
            value = record.values[i]
            if value is None:
                continue
            entry = index.get(value)
            if entry is None:
                entry = ValueEntry(value, 0, [])
                index[value] = entry
                entries.append(entry)
            entry.frequency += 1
            if record.source_id not in entry.source_ids:
                entry.source_ids.append(record.source_id)
        sets.append(AttributeValueSet(i, entries))
    return sets


def sim_attribute_val(avs, kind, config=DEFAULT_CONFIG, store=None, cache=None):
    """Sum of similarities of each candidate to every other distinct candidate.

    A singleton set has no siblings, so its sum is 0.
    """
    if cache is None:
        cache = TextSimilarityCache(config, store)
    values = avs.values()
    totals = []
    for value in values:
        total = 0.0
        for other in values:
            if other is value:
                continue
            total += cache.similarity(value, other, kind)
        totals.append(total)
    return totals


def similarity_frequency_product(value, query_value, avs, kind, config=DEFAULT_CONFIG, store=None, sibling_sum=None):
    """S*F*T for one candidate: query similarity, frequency, sibling similarity."""
    entry = next((e for e in avs.entries if e.value == value), None)
    if entry is None:
        raise ValueError(f"{value!r} is not in the attribute value set")
    cache = TextSimilarityCache(config, store)
    s = cache.similarity(query_value, value, kind)
    if sibling_sum is None:
        sibling_sum = sim_attribute_val(avs, kind, config, store, cache)[avs.values().index(value)]
    return s * entry.frequency * sibling_sum


def select_attribute_value(avs, ratings, matrix, query_value, kind, config=DEFAULT_CONFIG, store=None, cache=None):
    """Pick the candidate with the highest V3 = V1 * (S*F*T).

    V1 is the similarity of the top-rated source to the candidate's source;
    a candidate contributed by several sources takes the most favourable
    one. A singleton set wins outright (its sibling sum would be 0). Ties on
    V3 prefer the candidate from the higher-rated source, then the
    lexicographically smaller value. Returns (value, trace); an empty set
    keeps the query's own value.
    """
    if len(avs) == 0:
        return query_value, SelectionTrace(avs.attribute, "empty", query_value)
    if cache is None:
        cache = TextSimilarityCache(config, store)

    if len(avs) == 1:
        entry = avs.entries[0]
        trace = SelectionTrace(avs.attribute, "singleton", entry.value)
        trace.candidates.append(
            CandidateTrace(entry.value, entry.source_ids[0], 0.0, entry.frequency, 0.0, 0.0, 0.0, 0.0)
        )
        return entry.value, trace

    anchor = ratings.index_of_maximum
    rating_of = ratings.rating_map()
    sibling_sums = sim_attribute_val(avs, kind, config, store, cache)

    candidates = []
    for entry, sibling_sum in zip(avs.entries, sibling_sums):
        s = cache.similarity(query_value, entry.value, kind)
        v2 = s * entry.frequency * sibling_sum
        best_source = max(
            entry.source_ids,
            key=lambda sid: (matrix.cells[anchor, matrix.index(sid)], -entry.source_ids.index(sid)),
        )
        v1 = float(matrix.cells[anchor, matrix.index(best_source)])
        best_rating = max(rating_of[sid] for sid in entry.source_ids)
        candidates.append(
            (
                CandidateTrace(entry.value, best_source, s, entry.frequency, sibling_sum, v1, v2, v1 * v2),
                best_rating,
            )
        )

    winner = min(candidates, key=lambda c: (-c[0].score, -c[1], format_value(c[0].value)))[0]
    trace = SelectionTrace(avs.attribute, "product", winner.value, [c for c, _ in candidates])
    return winner.value, trace


def complete_profile(query, dataset, model, ratings, matrix, trust, config=DEFAULT_CONFIG, store=None, cache=None):
    """Run resolution then per-attribute selection for one query.

    Attributes the query fills are retained as given; blank attributes take
    the selected value, or stay missing when no associated record supplies
    one (the profile is then flagged incomplete).
    """
    if cache is None:
        cache = TextSimilarityCache(config, store)
    associated_ids = resolve(query, dataset, model, trust, config, store, cache)
    id_set = set(associated_ids)
    associated = [r for r in dataset.records if r.record_id in id_set]
    value_sets = build_attribute_value_sets(associated, dataset.schema)

    values = []
    traces = []
    for i, (kind, query_value) in enumerate(zip(dataset.schema.kinds, query.values)):
        if query_value is not None:
            values.append(query_value)
            traces.append(SelectionTrace(i, "query", query_value))
            continue
        chosen, trace = select_attribute_value(
            value_sets[i], ratings, matrix, query_value, kind, config, store, cache
        )
        values.append(chosen)
        traces.append(trace)

    return CompletedProfile(
        query_id=query.query_id,
        values=values,
        associated_record_ids=associated_ids,
        traces=traces,
        complete=all(v is not None for v in values),
    )
