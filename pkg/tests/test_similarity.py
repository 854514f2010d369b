import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entprof.model import Query, Record, Schema, ValidationError
from entprof.similarity import (
    DEFAULT_CONFIG,
    EmbeddingStore,
    SimilarityConfig,
    attribute_similarity,
    embedding_similarity,
    levenshtein_distance,
    levenshtein_similarity,
    numeric_similarity,
    query_record_similarity,
    record_similarity,
    text_similarity,
)

CRICKET = Schema((("Name", "text"), ("Matches", "numeric"), ("Runs", "numeric"), ("Highest", "numeric")))


class TestNumericSimilarity:
    def test_identical(self):
        assert numeric_similarity(125, 125) == 1.0

    def test_percentage_difference(self):
        assert numeric_similarity(40, 4) == pytest.approx(1 - 36 / 40)

    def test_clamps_at_zero(self):
        assert numeric_similarity(-1, 1) == 0.0

    def test_both_zero(self):
        assert numeric_similarity(0.0, 0.0) == 1.0


# Independent dynamic-programming oracle (full matrix, no row reuse).
def edit_distance_oracle(a, b):
    rows = len(a) + 1
    cols = len(b) + 1
    d = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        d[i][0] = i
    for j in range(cols):
        d[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[-1][-1]


class TestLevenshteinSimilarity:
    def test_identical(self):
        assert levenshtein_similarity("abc", "abc") == 1.0

    def test_kitten_sitting(self):
        assert edit_distance_oracle("kitten", "sitting") == 3
        assert levenshtein_similarity("kitten", "sitting") == pytest.approx(1 - 3 / 7)

    def test_full_deletion(self):
        assert levenshtein_similarity("a", "") == 0.0

    def test_both_empty(self):
        assert levenshtein_similarity("", "") == 1.0

    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=12), st.text(max_size=12))
    def test_matches_oracle(self, a, b):
        assert levenshtein_distance(a, b) == edit_distance_oracle(a, b)

    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=12), st.text(max_size=12))
    def test_self_similarity_dominates(self, a, b):
        assert levenshtein_similarity(a, a) == 1.0
        assert levenshtein_similarity(a, a) >= levenshtein_similarity(a, b)


class TestEmbeddingSimilarity:
    def test_identical_in_vocabulary(self):
        store = EmbeddingStore(2, {"Pizza": [1.0, 2.0]})
        assert embedding_similarity("Pizza", "Pizza", store) == pytest.approx(1.0)

    def test_orthogonal_vectors(self):
        store = EmbeddingStore(2, {"a": [1.0, 0.0], "b": [0.0, 1.0]})
        assert embedding_similarity("a", "b", store) == pytest.approx(0.0)

    def test_absent_token_gives_none(self):
        store = EmbeddingStore(2, {"a": [1.0, 0.0]})
        assert embedding_similarity("a", "missing", store) is None

    def test_zero_magnitude_mean_gives_none(self):
        store = EmbeddingStore(2, {"z": [0.0, 0.0], "a": [1.0, 0.0]})
        assert embedding_similarity("z", "a", store) is None

    def test_lookup_is_case_sensitive(self):
        store = EmbeddingStore(2, {"Pizza": [1.0, 0.0]})
        assert embedding_similarity("pizza", "Pizza", store) is None

    def test_mean_of_tokens(self):
        # cos(mean(SM, Gavaskar), Gavaskar) is exactly 0.7 by construction
        store = EmbeddingStore(
            2, {"Gavaskar": [1.0, 0.0], "SM": [0.0, math.sqrt(51.0) / 7.0]}
        )
        sim = embedding_similarity("SM Gavaskar", "Gavaskar", store)
        assert sim == pytest.approx(0.7, abs=1e-12)

    def test_negative_cosine_clamped_in_text_similarity(self):
        store = EmbeddingStore(2, {"a": [1.0, 0.0], "b": [-1.0, 0.0]})
        assert embedding_similarity("a", "b", store) == pytest.approx(-1.0)
        assert text_similarity("a", "b", DEFAULT_CONFIG, store) == 0.0

    def test_embedding_required_raises_on_gap(self):
        config = SimilarityConfig(embedding_required=True)
        store = EmbeddingStore(2, {"a": [1.0, 0.0]})
        with pytest.raises(LookupError):
            text_similarity("a", "missing", config, store)

    def test_store_round_trip(self, tmp_path, fixture_store):
        path = tmp_path / "store.txt"
        fixture_store.save(path)
        reloaded = EmbeddingStore.load(path)
        assert reloaded.dimension == fixture_store.dimension
        assert set(reloaded.entries) == set(fixture_store.entries)
        for token, vector in fixture_store.entries.items():
            assert list(reloaded.entries[token]) == list(vector)


class TestSimilarityConfig:
    def test_default_missing_pair_value(self):
        assert DEFAULT_CONFIG.missing_pair_similarity == 0.0001

    @pytest.mark.parametrize("value", [0.0, -0.1, 0.01, 1.0])
    def test_out_of_range_rejected(self, value):
        with pytest.raises(ValidationError):
            SimilarityConfig(missing_pair_similarity=value)


class TestAttributeSimilarity:
    def test_missing_side_scores_small_constant(self):
        assert attribute_similarity(None, 125.0, "numeric") == 0.0001

    def test_identical_text(self):
        assert attribute_similarity("Gavaskar", "Gavaskar", "text") == 1.0

    def test_identical_number(self):
        assert attribute_similarity(10122.0, 10122.0, "numeric") == 1.0

    @settings(max_examples=100, deadline=None)
    @given(
        st.one_of(st.none(), st.text(max_size=8)),
        st.one_of(st.none(), st.text(max_size=8)),
    )
    def test_text_symmetry_and_range(self, a, b):
        left = attribute_similarity(a, b, "text")
        right = attribute_similarity(b, a, "text")
        assert left == right
        assert 0.0 <= left <= 1.0

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(-1e6, 1e6, allow_nan=False),
        st.floats(-1e6, 1e6, allow_nan=False),
    )
    def test_numeric_symmetry_and_range(self, a, b):
        left = attribute_similarity(a, b, "numeric")
        assert left == attribute_similarity(b, a, "numeric")
        assert 0.0 <= left <= 1.0


def rec(record_id, source, name, matches, runs, highest):
    return Record(record_id, source, [name, matches, runs, highest])


class TestRecordSimilarity:
    def test_walkthrough_r1_r4(self):
        # name-pair similarity pinned at 0.70 through crafted vectors
        store = EmbeddingStore(2, {"Gavaskar": [1.0, 0.0], "SM": [0.0, math.sqrt(51.0) / 7.0]})
        r1 = rec("r1", "s1", "SM Gavaskar", 125.0, 10122.0, 236.0)
        r4 = rec("r4", "s2", "Gavaskar", 125.0, 10122.0, 236.0)
        assert record_similarity(r1, r4, CRICKET, store=store) == pytest.approx(3.7, abs=1e-9)

    def test_walkthrough_r6_r10(self):
        y_component = math.sqrt(1.0 / 0.746**2 - 1.0)
        store = EmbeddingStore(
            2, {"Singh": [1.0, 0.0], "Y": [1.0, 0.0], "Yuvraj": [0.0, y_component]}
        )
        r6 = rec("r6", "s2", "Yuvraj Singh", 40.0, 1900.0, 169.0)
        r10 = rec("r10", "s4", "Y Singh", 40.0, 1900.0, 169.0)
        assert record_similarity(r6, r10, CRICKET, store=store) == pytest.approx(3.746, abs=1e-9)

    def test_self_similarity_is_attribute_count(self):
        r = rec("r", "s", "Gavaskar", 125.0, 10122.0, 236.0)
        assert record_similarity(r, r, CRICKET) == pytest.approx(4.0)

    def test_symmetry(self):
        a = rec("a", "s1", "Lala Amarnath", 24.0, 878.0, 118.0)
        b = rec("b", "s2", "Mohinder Amarnath", 69.0, 4378.0, 138.0)
        assert record_similarity(a, b, CRICKET) == record_similarity(b, a, CRICKET)


class TestQueryRecordSimilarity:
    def test_q1_r4_worked_value(self):
        q1 = Query("q1", ["Gavaskar", None, 10122.0, None])
        r4 = rec("r4", "s2", "Gavaskar", 125.0, 10122.0, 236.0)
        assert query_record_similarity(q1, r4, CRICKET) == pytest.approx(2.0002, abs=1e-9)

    def test_single_filled_matching_value(self):
        q = Query("q", [None, 125.0, None, None])
        r = rec("r", "s", "X", 125.0, 1.0, 2.0)
        expected = 1.0 + 3 * 0.0001
        assert query_record_similarity(q, r, CRICKET) == pytest.approx(expected, abs=1e-12)

    def test_identical_fully_filled(self):
        q = Query("q", ["Gavaskar", 125.0, 10122.0, 236.0])
        r = rec("r", "s", "Gavaskar", 125.0, 10122.0, 236.0)
        assert query_record_similarity(q, r, CRICKET) == pytest.approx(4.0)
