import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entprof.model import Dataset, Record, Schema, Source, ValidationError
from entprof.similarity import DEFAULT_CONFIG, record_similarity
from entprof.sources import (
    SourceSimilarityMatrix,
    build_source_similarity_matrix,
    source_ratings,
    trustworthiness_scores,
    uniform_ratings,
)

# Inter-source similarities of the four-source cricket example.
CRICKET_MATRIX = SourceSimilarityMatrix(
    ["s1", "s2", "s3", "s4"],
    np.array(
        [
            [1.0000, 0.3141, 0.2564, 0.1602],
            [0.3199, 1.0000, 0.2868, 0.2124],
            [0.2803, 0.2968, 1.0000, 0.1802],
            [0.2277, 0.4671, 0.2380, 1.0000],
        ]
    ),
)


class TestTrustworthiness:
    def test_cricket_row_sums_and_trust(self):
        report = trustworthiness_scores(CRICKET_MATRIX)
        assert report.row_sums == pytest.approx([1.7307, 1.8191, 1.7573, 1.9328], abs=1e-9)
        assert report.mts_source == "s4"
        assert report.trust == pytest.approx([0.1602, 0.2124, 0.1802, 1.0], abs=1e-9)
        assert report.trust[report.mts_index] == 1.0

    def test_dominant_row_wins(self):
        matrix = SourceSimilarityMatrix(
            ["a", "b"], np.array([[1.0, 0.1], [0.9, 1.0]])
        )
        assert trustworthiness_scores(matrix).mts_source == "b"

    def test_all_equal_ties_to_lowest_index(self):
        matrix = SourceSimilarityMatrix(
            ["a", "b", "c"], np.full((3, 3), 1.0)
        )
        assert trustworthiness_scores(matrix).mts_index == 0

    def test_trust_within_unit_interval(self):
        report = trustworthiness_scores(CRICKET_MATRIX)
        assert all(0.0 <= t <= 1.0 for t in report.trust)


class TestSourceRatings:
    def test_worked_example(self):
        matrix = SourceSimilarityMatrix(
            ["s1", "s2", "s3"],
            np.array([[1.0, 0.3, 0.2], [0.4, 1.0, 0.1], [0.5, 0.2, 1.0]]),
        )
        ratings = source_ratings(matrix, "s1", 2.0)
        assert ratings.ratings == pytest.approx([2.0, 0.8, 1.0], abs=1e-12)
        assert ratings.index_of_maximum == 0

    def test_single_source(self):
        matrix = SourceSimilarityMatrix(["only"], np.array([[1.0]]))
        ratings = source_ratings(matrix, "only", 1.0)
        assert ratings.ratings == [1.0]

    def test_scaling_preserves_argmax(self):
        ratings_1 = source_ratings(CRICKET_MATRIX, "s2", 1.5)
        ratings_2 = source_ratings(CRICKET_MATRIX, "s2", 3.0)
        assert ratings_2.index_of_maximum == ratings_1.index_of_maximum
        assert ratings_2.ratings == pytest.approx([2 * r for r in ratings_1.ratings])

    def test_unknown_source_rejected(self):
        with pytest.raises(ValidationError):
            source_ratings(CRICKET_MATRIX, "s9", 1.0)

    def test_non_positive_bias_rejected(self):
        with pytest.raises(ValidationError):
            source_ratings(CRICKET_MATRIX, "s1", 0.0)


class TestUniformRatings:
    def test_four_sources(self):
        ratings = uniform_ratings(["s1", "s2", "s3", "s4"])
        assert ratings.ratings == [1.0, 1.0, 1.0, 1.0]
        assert ratings.index_of_maximum == 0

    def test_single_source(self):
        assert uniform_ratings(["s1"]).ratings == [1.0]


SCHEMA = Schema((("name", "text"), ("score", "numeric")))


def dataset_from(rows):
    """rows: list of (record_id, source_id, name, score)."""
    records = [Record(rid, sid, [name, score]) for rid, sid, name, score in rows]
    groups = {}
    for record in records:
        groups.setdefault(record.source_id, []).append(record.record_id)
    sources = [Source(sid, rids) for sid, rids in groups.items()]
    return Dataset(schema=SCHEMA, records=records, sources=sources)


class TestMatrixConstruction:
    def test_single_source(self):
        dataset = dataset_from([("r1", "s1", "alpha", 1.0)])
        matrix = build_source_similarity_matrix(dataset)
        assert matrix.cells.tolist() == [[1.0]]

    def test_identical_record_sets(self):
        dataset = dataset_from(
            [
                ("r1", "s1", "alpha", 1.0),
                ("r2", "s1", "beta", 2.0),
                ("r3", "s2", "alpha", 1.0),
                ("r4", "s2", "beta", 2.0),
            ]
        )
        matrix = build_source_similarity_matrix(dataset)
        assert matrix.cells.tolist() == [[1.0, 1.0], [1.0, 1.0]]

    def test_diagonal_is_one_even_with_missing_values(self):
        dataset = dataset_from(
            [
                ("r1", "s1", None, 1.0),
                ("r2", "s1", "beta", None),
                ("r3", "s2", None, None),
            ]
        )
        # r3 is all-missing; its only self-match makes the s2 diagonal 1.0
        matrix = build_source_similarity_matrix(dataset)
        assert matrix.cells[0, 0] == 1.0
        assert matrix.cells[1, 1] == 1.0

    def test_empty_source_rejected(self):
        dataset = dataset_from([("r1", "s1", "alpha", 1.0)])
        dataset.sources.append(Source("s2", []))
        with pytest.raises(ValidationError):
            build_source_similarity_matrix(dataset)

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "matrix.csv"
        CRICKET_MATRIX.write_csv(path)
        reloaded = SourceSimilarityMatrix.read_csv(path)
        assert reloaded.source_order == CRICKET_MATRIX.source_order
        assert np.array_equal(reloaded.cells, CRICKET_MATRIX.cells)


def matrix_oracle(dataset):
    """Brute-force double loop over all record pairs via the public scalar API."""
    by_source = dataset.records_by_source()
    order = dataset.source_order()
    width = len(dataset.schema)
    cells = np.zeros((len(order), len(order)))
    for i, s1 in enumerate(order):
        for j, s2 in enumerate(order):
            total = 0.0
            for r1 in by_source[s1]:
                candidates = [
                    1.0
                    if r1.record_id == r2.record_id
                    else record_similarity(r1, r2, dataset.schema, DEFAULT_CONFIG) / width
                    for r2 in by_source[s2]
                ]
                total += max(candidates)
            cells[i, j] = total / len(by_source[s1])
    return cells


@st.composite
def small_source_datasets(draw):
    n_sources = draw(st.integers(1, 5))
    rows = []
    counter = 0
    for source_index in range(n_sources):
        for _ in range(draw(st.integers(1, 5))):
            name = draw(st.one_of(st.none(), st.text("abcd", min_size=1, max_size=4)))
            score = draw(st.one_of(st.none(), st.floats(-100, 100, allow_nan=False)))
            rows.append((f"r{counter}", f"s{source_index}", name, score))
            counter += 1
    return dataset_from(rows)


class TestMatrixOracle:
    @settings(max_examples=40, deadline=None)
    @given(dataset=small_source_datasets())
    def test_matches_brute_force(self, dataset):
        matrix = build_source_similarity_matrix(dataset)
        expected = matrix_oracle(dataset)
        assert np.array_equal(matrix.cells, expected)
        assert all(matrix.cells[i, i] == 1.0 for i in range(len(matrix.source_order)))
        assert np.all(matrix.cells >= 0.0) and np.all(matrix.cells <= 1.0)
