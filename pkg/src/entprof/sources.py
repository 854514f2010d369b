"""Source-similarity matrix, trustworthiness scores and biased source ratings.

Sources are compared through their records: the similarity of source A to
source B is the mean, over A's records, of the best per-attribute-mean
similarity against B's records. Trustworthiness anchors every source to the
one most similar to all others; ratings anchor to a user-chosen biased
source instead.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from entprof.model import ValidationError
from entprof.similarity import DEFAULT_CONFIG, TextSimilarityCache


@dataclass
class SourceSimilarityMatrix:
    """Square matrix of inter-source similarities.

    ``cells[i][j]`` is the similarity of source i to source j. The matrix is
    not symmetric in general (each row is normalized by its own source's
    record count); diagonal cells are exactly 1.0.
    """

    source_order: list
    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=float)
        n = len(self.source_order)
        if self.cells.shape != (n, n):
            raise ValidationError(
                f"matrix shape {self.cells.shape} does not match {n} sources"
            )

    def index(self, source_id):
        try:
            return self.source_order.index(source_id)
        except ValueError:
            raise ValidationError(f"unknown source {source_id!r}") from None

    def cell(self, row_source, col_source):
        return float(self.cells[self.index(row_source), self.index(col_source)])

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["source", *self.source_order])
            for source_id, row in zip(self.source_order, self.cells):
                writer.writerow([source_id] + [repr(float(x)) for x in row])

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        order = rows[0][1:]
        cells = [[float(x) for x in row[1:]] for row in rows[1:]]
        return cls(order, np.array(cells))


@dataclass
class TrustReport:
    """Per-source trustworthiness relative to the most trustworthy source."""

    source_order: list
    row_sums: list
    mts_index: int
    trust: list

    @property
    def mts_source(self):
        return self.source_order[self.mts_index]

    def trust_map(self):
        return dict(zip(self.source_order, self.trust))


@dataclass
class SourceRatings:
    """Ratings anchored to a biased source (or uniform when biased_source is None)."""

    source_order: list
    biased_source: str | None
    bias_value: float
    ratings: list
    index_of_maximum: int

    def rating_map(self):
        return dict(zip(self.source_order, self.ratings))


def build_source_similarity_matrix(dataset, config=DEFAULT_CONFIG, store=None):
    """Best-match record similarity per source pair, normalized to [0, 1].

    Record similarity is divided by the attribute count here so each cell is
    a per-attribute mean; a record's match against itself is defined as 1.0,
    which pins the diagonal at exactly 1.0 for every dataset.
    """
    by_source = dataset.records_by_source()
    order = dataset.source_order()
    for source_id in order:
        if not by_source[source_id]:
            raise ValidationError(f"source {source_id!r} has no records")

    width = len(dataset.schema)
    cache = TextSimilarityCache(config, store)
    n = len(order)
    cells = np.zeros((n, n))
    for i, s1 in enumerate(order):
        for j, s2 in enumerate(order):
            total = 0.0
            for r1 in by_source[s1]:
                best = 0.0
                for r2 in by_source[s2]:
                    if r1.record_id == r2.record_id:
                        sim = 1.0
                    else:
                        sim = cache.values_similarity(r1.values, r2.values, dataset.schema) / width
                    if sim > best:
                        best = sim
                total += best
            cells[i, j] = total / len(by_source[s1])
    return SourceSimilarityMatrix(order, cells)


def trustworthiness_scores(matrix):
    """Row sums pick the most trustworthy source; trust is similarity to it.

    Argmax ties break toward the lowest source index.
    """
    row_sums = [float(np.sum(row)) for row in matrix.cells]
    mts_index = max(range(len(row_sums)), key=lambda i: (row_sums[i], -i))
    trust = [float(matrix.cells[i, mts_index]) for i in range(len(row_sums))]
    return TrustReport(list(matrix.source_order), row_sums, mts_index, trust)


def source_ratings(matrix, biased_source, bias_value):
    """Scale every source's similarity-to-the-biased-source by the bias value."""
    if bias_value <= 0:
        raise ValidationError(f"bias_value must be positive, got {bias_value!r}")
    biased = matrix.index(biased_source)
    anchor = float(matrix.cells[biased, biased])
    ratings = [float(bias_value * matrix.cells[i, biased] / anchor) for i in range(len(matrix.source_order))]
    index_of_maximum = max(range(len(ratings)), key=lambda i: (ratings[i], -i))
    return SourceRatings(list(matrix.source_order), biased_source, bias_value, ratings, index_of_maximum)


def uniform_ratings(sources):
    """Equal ratings for all sources (the no-biasing ablation)."""
    order = list(sources)
    if not order:
        raise ValidationError("at least one source is required")
    return SourceRatings(order, None, 1.0, [1.0] * len(order), 0)
