"""Attribute-level, record-record and query-record similarity measures.

Numeric values compare by percentage difference, text values by cosine
similarity of mean word vectors with a Levenshtein fallback for tokens
absent from the embedding store. Pairs with a missing side score a small
constant so that records with thin coverage still rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from entprof.model import NUMERIC, ValidationError


@dataclass(frozen=True)
class SimilarityConfig:
    """Knobs for attribute comparison.

    ``missing_pair_similarity`` is the score for any pair with a missing
    side. ``embedding_required`` turns missing vocabulary into an error
    instead of falling back to edit distance.
    """

    missing_pair_similarity: float = 0.0001
    embedding_required: bool = False

    def __post_init__(self):
        if not 0.0 < self.missing_pair_similarity <= 0.001:
            raise ValidationError(
                "missing_pair_similarity must be in (0, 0.001], got "
                f"{self.missing_pair_similarity!r}"
            )


DEFAULT_CONFIG = SimilarityConfig()


class EmbeddingStore:
    """Token-to-vector lookup table with exact, case-sensitive matching.

    Text format: first line ``count dimension``, then one line per token:
    ``token v1 v2 ... vD`` with space-separated decimal reals.
    """

    def __init__(self, dimension, entries=None):
        if dimension <= 0:
            raise ValidationError("embedding dimension must be positive")
        self.dimension = int(dimension)
        self.entries = {}
        for token, vector in (entries or {}).items():
            self.add(token, vector)

    @classmethod
    def empty(cls, dimension=1):
        return cls(dimension)

    def add(self, token, vector):
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.dimension,):
            raise ValidationError(
                f"vector for {token!r} has {vector.size} components, expected {self.dimension}"
            )
        self.entries[token] = vector

    def vector(self, token):
        return self.entries.get(token)

    def __contains__(self, token):
        return token in self.entries

    def __len__(self):
        return len(self.entries)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as handle:
            first = handle.readline().split()
            if len(first) != 2:
                raise ValidationError(f"{path}: expected 'count dimension' header line")
            count, dimension = int(first[0]), int(first[1])
            store = cls(dimension)
            for line in handle:
                parts = line.rstrip("\n").split(" ")
                if len(parts) != dimension + 1:
                    raise ValidationError(f"{path}: bad entry line for {parts[0]!r}")
                store.add(parts[0], [float(x) for x in parts[1:]])
        if len(store) != count:
            raise ValidationError(f"{path}: header says {count} entries, found {len(store)}")
        return store

    def save(self, path):
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(f"{len(self.entries)} {self.dimension}\n")
            for token, vector in self.entries.items():
                handle.write(token + " " + " ".join(repr(float(x)) for x in vector) + "\n")


def numeric_similarity(a, b):
    """Percentage-difference similarity: 1 - |a-b| / max(|a|,|b|), clamped to [0,1]."""
    if a == b:
        return 1.0
    denom = max(abs(a), abs(b))
    return min(1.0, max(0.0, 1.0 - abs(a - b) / denom))


def levenshtein_distance(a, b):
    """Edit distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def levenshtein_similarity(a, b):
    """1 - edit_distance / max(len); two empty strings are identical."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein_distance(a, b) / longest


def embedding_similarity(a, b, store):
    """Cosine similarity of mean token vectors, or None when not computable.

    Strings are tokenized on whitespace. If any token of either string is
    absent from the store (or a mean vector has zero magnitude), the result
    is None and the caller is expected to fall back to edit distance.
    """
    if store is None or len(store) == 0:
        return None
    tokens_a = a.split()
    tokens_b = b.split()
    if not tokens_a or not tokens_b:
        return None
    vectors_a = [store.vector(t) for t in tokens_a]
    vectors_b = [store.vector(t) for t in tokens_b]
    if any(v is None for v in vectors_a) or any(v is None for v in vectors_b):
        return None
    mean_a = np.mean(vectors_a, axis=0)
    mean_b = np.mean(vectors_b, axis=0)
    norm_a = float(np.linalg.norm(mean_a))
    norm_b = float(np.linalg.norm(mean_b))
    if norm_a == 0.0 or norm_b == 0.0:
        return None
    return float(np.dot(mean_a, mean_b) / (norm_a * norm_b))


def text_similarity(a, b, config=DEFAULT_CONFIG, store=None):
    """Embedding similarity when the vocabulary covers both strings, else Levenshtein.

    Negative cosine values clamp to 0 so text scores stay comparable with
    the edit-distance branch.
    """
    cosine = embedding_similarity(a, b, store)
    if cosine is None:
        if config.embedding_required:
            raise LookupError(f"no embedding coverage for {a!r} vs {b!r}")
        return levenshtein_similarity(a, b)
    return max(0.0, cosine)


def attribute_similarity(a, b, kind, config=DEFAULT_CONFIG, store=None):
    """Similarity of two attribute values of the same kind, in [0, 1]."""
    if a is None or b is None:
        return config.missing_pair_similarity
    if kind == NUMERIC:
        return numeric_similarity(a, b)
    return text_similarity(a, b, config, store)


def values_similarity(values_a, values_b, schema, config=DEFAULT_CONFIG, store=None):
    """Sum of per-attribute similarities over two aligned value tuples."""
    total = 0.0
    for a, b, kind in zip(values_a, values_b, schema.kinds):
        total += attribute_similarity(a, b, kind, config, store)
    return total


def record_similarity(a, b, schema, config=DEFAULT_CONFIG, store=None):
    """Record-to-record similarity: sum of attribute similarities."""
    return values_similarity(a.values, b.values, schema, config, store)


def query_record_similarity(query, record, schema, config=DEFAULT_CONFIG, store=None):
    """Query-to-record similarity; missing query slots contribute the missing-pair score."""
    return values_similarity(query.values, record.values, schema, config, store)


class TextSimilarityCache:
    """Memo for text-pair similarities within one bulk computation.

    Text comparison dominates pairwise workloads and the same string pairs
    recur across sources; the cache keys on the unordered pair (the measure
    is symmetric).
    """

    def __init__(self, config=DEFAULT_CONFIG, store=None):
        self.config = config
        self.store = store
        self._memo = {}

    def similarity(self, a, b, kind):
        if a is None or b is None:
            return self.config.missing_pair_similarity
        if kind == NUMERIC:
            return numeric_similarity(a, b)
        key = (a, b) if a <= b else (b, a)
        value = self._memo.get(key)
        if value is None:
            value = text_similarity(a, b, self.config, self.store)
            self._memo[key] = value
        return value

    def values_similarity(self, values_a, values_b, schema):
        total = 0.0
        for a, b, kind in zip(values_a, values_b, schema.kinds):
            total += self.similarity(a, b, kind)
        return total
