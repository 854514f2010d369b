"""Resolution-phase learning model: features, classifiers and selection metrics.

A query-record pair is encoded as per-attribute similarities (missing pairs
contribute 0.0 here, unlike the similarity module's small constant), per-
attribute record presence flags, and the trustworthiness of the record's
source. Four binary classifiers are implemented from scratch so that
training is fully deterministic under a seed and models serialize to a
stable text format.
"""

from __future__ import annotations

import json
import math
import random
import sys
from dataclasses import dataclass

import numpy as np

from entprof.model import ValidationError
from entprof.similarity import DEFAULT_CONFIG, TextSimilarityCache, attribute_similarity

CLASSIFIER_KINDS = ("tree", "forest", "bayes", "knn")

MODEL_FORMAT = "entprof-model/1"

# Smallest allowed per-feature variance in the Gaussian model; zero-variance
# features would otherwise produce degenerate densities.
VARIANCE_FLOOR = 1e-9


def extract_features(query, record, trust, schema, config=DEFAULT_CONFIG, store=None, cache=None):
    """Encode one query-record pair as [similarities(A), flags(A), trust].

    A missing value on either side forces the similarity feature to 0.0;
    the flag features reflect record-side presence only.
    """
    sims = []
    flags = []
    for qv, rv, kind in zip(query.values, record.values, schema.kinds):
        flags.append(0.0 if rv is None else 1.0)
        if qv is None or rv is None:
            sims.append(0.0)
        elif cache is not None:
            sims.append(cache.similarity(qv, rv, kind))
        else:
            sims.append(attribute_similarity(qv, rv, kind, config, store))
    return sims + flags + [float(trust)]


@dataclass
class LabeledExample:
    features: list
    label: int
    query_id: str
    record_id: str


def build_training_set(dataset, trust, query_split=0.8, seed=0, config=DEFAULT_CONFIG, store=None):
    """Split queries by seed, then pair every training query with every record.

    ``trust`` maps source ids to trustworthiness scores. A pair is labeled 1
    exactly when the record and query carry the same entity annotation.
    Returns (training examples, held-out queries).
    """
    queries = list(dataset.queries)
    rng = random.Random(seed)
    rng.shuffle(queries)
    n_train = int(round(len(queries) * query_split))
    train_queries, test_queries = queries[:n_train], queries[n_train:]

    cache = TextSimilarityCache(config, store)
    examples = []
    for query in train_queries:
        if query.entity_id is None:
            raise ValidationError(f"query {query.query_id!r} lacks an entity annotation")
        for record in dataset.records:
            if record.entity_id is None:
                raise ValidationError(f"record {record.record_id!r} lacks an entity annotation")
            features = extract_features(
                query, record, trust[record.source_id], dataset.schema, config, store, cache
            )
            label = int(record.entity_id == query.entity_id)
            examples.append(LabeledExample(features, label, query.query_id, record.record_id))
    return examples, test_queries


def _design_matrix(examples):
    X = np.array([e.features for e in examples], dtype=float)
    y = np.array([e.label for e in examples], dtype=np.int64)
    return X, y


# ---------------------------------------------------------------------------
# Decision tree (binary CART, Gini impurity)
# ---------------------------------------------------------------------------


class _Leaf:
    __slots__ = ("n0", "n1")

    def __init__(self, n0, n1):
        self.n0 = n0
        self.n1 = n1

    @property
    def score(self):
        total = self.n0 + self.n1
        return self.n1 / total if total else 0.0


class _Split:
    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature, threshold, left, right):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


def _best_split(X, y, feature_ids):
    """Exhaustive Gini search over midpoint thresholds of the given features.

    Minimizes the size-weighted child impurity; ties keep the first
    candidate in (feature order, ascending threshold) so training is
    deterministic. Returns (feature, threshold) or None when no feature has
    two distinct values.
    """
    n = y.shape[0]
    total_pos = int(y.sum())
    best_score = math.inf
    best = None
    for f in feature_ids:
        column = X[:, f]
        order = np.argsort(column, kind="stable")
        sorted_values = column[order]
        sorted_labels = y[order]
        boundaries = np.nonzero(sorted_values[1:] != sorted_values[:-1])[0]
        if boundaries.size == 0:
            continue
        pos_prefix = np.cumsum(sorted_labels)
        n_left = boundaries + 1
        pos_left = pos_prefix[boundaries]
        n_right = n - n_left
        pos_right = total_pos - pos_left
        gini_left = 1.0 - (pos_left**2 + (n_left - pos_left) ** 2) / (n_left**2)
        gini_right = 1.0 - (pos_right**2 + (n_right - pos_right) ** 2) / (n_right**2)
        weighted = n_left * gini_left + n_right * gini_right
        k = int(np.argmin(weighted))
        if weighted[k] < best_score:
            best_score = float(weighted[k])
            b = int(boundaries[k])
            best = (int(f), float((sorted_values[b] + sorted_values[b + 1]) / 2.0))
    return best


def _grow_tree(X, y, rng, max_features):
    n0 = int((y == 0).sum())
    n1 = int(y.shape[0] - n0)
    if n0 == 0 or n1 == 0 or y.shape[0] < 2:
        return _Leaf(n0, n1)
    d = X.shape[1]
    if max_features is None or max_features >= d:
        features = range(d)
    else:
        features = np.sort(rng.choice(d, size=max_features, replace=False))
    split = _best_split(X, y, features)
    if split is None:
        return _Leaf(n0, n1)
    feature, threshold = split
    mask = X[:, feature] <= threshold
    if mask.all() or not mask.any():  # degenerate midpoint rounding
        return _Leaf(n0, n1)
    left = _grow_tree(X[mask], y[mask], rng, max_features)
    right = _grow_tree(X[~mask], y[~mask], rng, max_features)
    return _Split(feature, threshold, left, right)


def _tree_score_one(node, features):
    while isinstance(node, _Split):
        node = node.left if features[node.feature] <= node.threshold else node.right
    return node.score


def _tree_scores(node, X, out, idx=None):
    if idx is None:
        idx = np.arange(X.shape[0])
    if isinstance(node, _Leaf):
        out[idx] = node.score
        return
    mask = X[idx, node.feature] <= node.threshold
    _tree_scores(node.left, X, out, idx[mask])
    _tree_scores(node.right, X, out, idx[~mask])


def _tree_to_lists(node):
    if isinstance(node, _Leaf):
        return [node.n0, node.n1]
    return [node.feature, node.threshold, _tree_to_lists(node.left), _tree_to_lists(node.right)]


def _tree_from_lists(data):
    if len(data) == 2:
        return _Leaf(int(data[0]), int(data[1]))
    feature, threshold, left, right = data
    return _Split(int(feature), float(threshold), _tree_from_lists(left), _tree_from_lists(right))


class DecisionTreeModel:
    """CART tree grown until leaves are pure or hold fewer than 2 samples."""

    kind = "tree"

    def __init__(self, root, n_features, seed, hyperparameters):
        self.root = root
        self.n_features = n_features
        self.seed = seed
        self.hyperparameters = hyperparameters

    @classmethod
    def fit(cls, X, y, seed, hyperparameters):
        with _deep_recursion():
            root = _grow_tree(X, y, None, None)
        return cls(root, X.shape[1], seed, hyperparameters)

    def predict_score(self, features):
        return _tree_score_one(self.root, features)

    def predict_scores(self, X):
        out = np.empty(X.shape[0])
        with _deep_recursion():
            _tree_scores(self.root, X, out)
        return out

    def payload(self):
        return {"tree": _tree_to_lists(self.root), "n_features": self.n_features}

    @classmethod
    def from_payload(cls, payload, seed, hyperparameters):
        return cls(_tree_from_lists(payload["tree"]), int(payload["n_features"]), seed, hyperparameters)


class RandomForestModel:
    """Bootstrap ensemble of CART trees with per-split feature subsampling.

    Per-tree generators are spawned from the master seed so trees can be
    trained in any order (or concurrently) with identical results. Setting
    ``bootstrap=False`` together with ``max_features`` equal to the feature
    count reduces a 1-tree forest to the bare decision tree.
    """

    kind = "forest"

    def __init__(self, trees, n_features, seed, hyperparameters):
        self.trees = trees
        self.n_features = n_features
        self.seed = seed
        self.hyperparameters = hyperparameters

    @classmethod
    def fit(cls, X, y, seed, hyperparameters):
        n_trees = int(hyperparameters.get("n_trees", 10))
        bootstrap = bool(hyperparameters.get("bootstrap", True))
        max_features = hyperparameters.get("max_features")
        if n_trees < 1:
            raise ValidationError("forest needs at least one tree")
        if max_features is None:
            max_features = math.isqrt(X.shape[1])
            if max_features * max_features < X.shape[1]:
                max_features += 1
        n = X.shape[0]
        trees = []
        with _deep_recursion():
            for child_seq in np.random.SeedSequence(seed).spawn(n_trees):
                rng = np.random.default_rng(child_seq)
                if bootstrap:
                    idx = rng.integers(0, n, size=n)
                    sample_X, sample_y = X[idx], y[idx]
                else:
                    sample_X, sample_y = X, y
                trees.append(_grow_tree(sample_X, sample_y, rng, int(max_features)))
        return cls(trees, X.shape[1], seed, hyperparameters)

    def predict_score(self, features):
        votes = sum(1 for tree in self.trees if _tree_score_one(tree, features) >= 0.5)
        return votes / len(self.trees)

    def predict_scores(self, X):
        votes = np.zeros(X.shape[0])
        out = np.empty(X.shape[0])
        with _deep_recursion():
            for tree in self.trees:
                _tree_scores(tree, X, out)
                votes += out >= 0.5
        return votes / len(self.trees)

    def payload(self):
        return {
            "trees": [_tree_to_lists(t) for t in self.trees],
            "n_features": self.n_features,
        }

    @classmethod
    def from_payload(cls, payload, seed, hyperparameters):
        trees = [_tree_from_lists(t) for t in payload["trees"]]
        return cls(trees, int(payload["n_features"]), seed, hyperparameters)


class GaussianNaiveBayesModel:
    """Per-class Gaussian feature densities with class priors."""

    kind = "bayes"

    def __init__(self, priors, means, variances, seed, hyperparameters):
        self.priors = np.asarray(priors, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.variances = np.asarray(variances, dtype=float)
        self.seed = seed
        self.hyperparameters = hyperparameters

    @property
    def n_features(self):
        return self.means.shape[1]

    @classmethod
    def fit(cls, X, y, seed, hyperparameters):
        if (y == 0).sum() == 0 or (y == 1).sum() == 0:
            raise ValidationError("naive bayes requires both labels in the training data")
        priors, means, variances = [], [], []
        for label in (0, 1):
            rows = X[y == label]
            priors.append(rows.shape[0] / X.shape[0])
            means.append(rows.mean(axis=0))
            variances.append(np.maximum(rows.var(axis=0), VARIANCE_FLOOR))
        return cls(priors, means, variances, seed, hyperparameters)

    def _log_likelihoods(self, X):
        ll = np.empty((X.shape[0], 2))
        for label in (0, 1):
            var = self.variances[label]
            diff = X - self.means[label]
            ll[:, label] = (
                math.log(self.priors[label])
                - 0.5 * np.sum(np.log(2.0 * math.pi * var))
                - np.sum(diff * diff / (2.0 * var), axis=1)
            )
        return ll

    def predict_score(self, features):
        return float(self.predict_scores(np.asarray([features], dtype=float))[0])

    def predict_scores(self, X):
        ll = self._log_likelihoods(X)
        delta = np.clip(ll[:, 0] - ll[:, 1], -700.0, 700.0)
        return 1.0 / (1.0 + np.exp(delta))

    def payload(self):
        return {
            "priors": self.priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_payload(cls, payload, seed, hyperparameters):
        return cls(payload["priors"], payload["means"], payload["variances"], seed, hyperparameters)


class KNearestModel:
    """k-nearest-neighbour voting over stored examples (Euclidean distance).

    Distance ties at the k-th position resolve toward the lower stored
    index, so prediction does not depend on sort stability.
    """

    kind = "knn"

    def __init__(self, X, y, k, seed, hyperparameters):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=np.int64)
        self.k = int(k)
        self.seed = seed
        self.hyperparameters = hyperparameters

    @property
    def n_features(self):
        return self.X.shape[1]

    @classmethod
    def fit(cls, X, y, seed, hyperparameters):
        k = int(hyperparameters.get("k", 5))
        if k < 1:
            raise ValidationError("k must be positive")
        if k > X.shape[0]:
            raise ValidationError(f"k={k} exceeds the {X.shape[0]} stored examples")
        return cls(X, y, k, seed, hyperparameters)

    def _vote(self, distances):
        kth = np.partition(distances, self.k - 1)[self.k - 1]
        closer = np.nonzero(distances < kth)[0]
        tied = np.nonzero(distances == kth)[0]
        take = self.k - closer.size
        chosen = np.concatenate([closer, tied[:take]])
        return float(self.y[chosen].mean())

    def predict_score(self, features):
        diff = self.X - np.asarray(features, dtype=float)
        return self._vote(np.sqrt(np.sum(diff * diff, axis=1)))

    def predict_scores(self, X, chunk=256):
        X = np.asarray(X, dtype=float)
        base = np.sum(self.X * self.X, axis=1)
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], chunk):
            block = X[start : start + chunk]
            d2 = base - 2.0 * block @ self.X.T + np.sum(block * block, axis=1)[:, None]
            np.maximum(d2, 0.0, out=d2)
            d = np.sqrt(d2)
            for i in range(block.shape[0]):
                out[start + i] = self._vote(d[i])
        return out

    def payload(self):
        return {"k": self.k, "examples": self.X.tolist(), "labels": self.y.tolist()}

    @classmethod
    def from_payload(cls, payload, seed, hyperparameters):
        return cls(payload["examples"], payload["labels"], payload["k"], seed, hyperparameters)


_MODEL_CLASSES = {
    "tree": DecisionTreeModel,
    "forest": RandomForestModel,
    "bayes": GaussianNaiveBayesModel,
    "knn": KNearestModel,
}


class _deep_recursion:
    """Temporarily raise the recursion limit for tree growth on large inputs."""

    def __enter__(self):
        self._old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(self._old, 100_000))

    def __exit__(self, *exc):
        sys.setrecursionlimit(self._old)


def train(kind, examples, hyperparameters=None, seed=0):
    """Train a classifier of the given kind on labeled query-record pairs."""
    if kind not in _MODEL_CLASSES:
        raise ValidationError(f"unknown classifier kind {kind!r}")
    if not examples:
        raise ValidationError("cannot train on an empty example list")
    X, y = _design_matrix(examples)
    return _MODEL_CLASSES[kind].fit(X, y, seed, dict(hyperparameters or {}))


def predict(model, features):
    """Return (label, score); the label is 1 exactly when score >= 0.5."""
    if len(features) != model.n_features:
        raise ValidationError(
            f"feature vector has {len(features)} components, model expects {model.n_features}"
        )
    score = float(model.predict_score(features))
    return (1 if score >= 0.5 else 0), score


def serialize_model(model):
    """Stable, self-describing text form; identical models match byte-for-byte."""
    document = {
        "format": MODEL_FORMAT,
        "kind": model.kind,
        "seed": model.seed,
        "hyperparameters": model.hyperparameters,
        "model": model.payload(),
    }
    return json.dumps(document, sort_keys=True, separators=(",", ":")) + "\n"


def deserialize_model(text):
    document = json.loads(text)
    if document.get("format") != MODEL_FORMAT:
        raise ValidationError(f"unsupported model format {document.get('format')!r}")
    cls = _MODEL_CLASSES.get(document.get("kind"))
    if cls is None:
        raise ValidationError(f"unknown classifier kind {document.get('kind')!r}")
    return cls.from_payload(document["model"], document.get("seed"), document.get("hyperparameters") or {})


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_model(model))


def load_model(path):
    with open(path, encoding="utf-8") as handle:
        return deserialize_model(handle.read())


# ---------------------------------------------------------------------------
# Model-selection metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion_counts(labels, predictions):
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    tp = int(np.sum((labels == 1) & (predictions == 1)))
    fp = int(np.sum((labels == 0) & (predictions == 1)))
    tn = int(np.sum((labels == 0) & (predictions == 0)))
    fn = int(np.sum((labels == 1) & (predictions == 0)))
    return ConfusionCounts(tp, fp, tn, fn)


def f1_score(counts):
    """Harmonic mean of precision and recall on the positive label."""
    denominator = 2 * counts.tp + counts.fp + counts.fn
    if denominator == 0:
        return 0.0
    return 2 * counts.tp / denominator


def mcc(counts):
    """Matthews correlation; 0.0 by convention when any root factor is zero."""
    tp, fp, tn, fn = counts.tp, counts.fp, counts.tn, counts.fn
    product = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if product == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(product)


def roc_auc(scores, labels):
    """Rank-statistic AUC; tied scores receive mean ranks."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    n = scores.shape[0]
    n_pos = int(labels.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC AUC requires both labels to be present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def cv_error(kind, examples, folds=10, seed=0, hyperparameters=None):
    """Mean misclassification percentage over seeded cross-validation folds."""
    if folds < 2:
        raise ValidationError("cross-validation needs at least 2 folds")
    if len(examples) < folds:
        raise ValidationError(f"{len(examples)} examples cannot fill {folds} folds")
    indices = list(range(len(examples)))
    random.Random(seed).shuffle(indices)
    base, extra = divmod(len(indices), folds)
    fold_errors = []
    start = 0
    for fold in range(folds):
        size = base + (1 if fold < extra else 0)
        held = indices[start : start + size]
        start += size
        held_set = set(held)
        train_examples = [examples[i] for i in indices if i not in held_set]
        model = train(kind, train_examples, hyperparameters, seed)
        X, y = _design_matrix([examples[i] for i in held])
        wrong = int(np.sum((model.predict_scores(X) >= 0.5).astype(np.int64) != y))
        fold_errors.append(100.0 * wrong / len(held))
    return float(np.mean(fold_errors))


@dataclass(frozen=True)
class ModelMetrics:
    f1: float
    cv_error_pct: float
    roc_auc: float
    mcc: float


def select_model(examples, kinds=CLASSIFIER_KINDS, seed=0, split=0.8, folds=10, hyperparameters=None):
    """Train each kind on a seeded example split and pick the best by F1.

    Metrics per kind: F1 / MCC / ROC AUC on the held-out examples and the
    10-fold cross-validation error over all examples. Ties on F1 resolve by
    higher MCC, then input order.
    """
    if not kinds:
        raise ValidationError("no classifier kinds offered")
    hyperparameters = hyperparameters or {}
    shuffled = list(examples)
    random.Random(seed).shuffle(shuffled)
    n_train = int(round(len(shuffled) * split))
    train_examples, test_examples = shuffled[:n_train], shuffled[n_train:]
    if not train_examples or not test_examples:
        raise ValidationError("example split leaves an empty partition")
    X_test, y_test = _design_matrix(test_examples)

    table = {}
    for kind in kinds:
        params = hyperparameters.get(kind)
        model = train(kind, train_examples, params, seed)
        scores = model.predict_scores(X_test)
        counts = confusion_counts(y_test, (scores >= 0.5).astype(np.int64))
        table[kind] = ModelMetrics(
            f1=f1_score(counts),
            cv_error_pct=cv_error(kind, examples, folds, seed, params),
            roc_auc=roc_auc(scores, y_test),
            mcc=mcc(counts),
        )

    ordered = list(table)
    best = max(ordered, key=lambda k: (table[k].f1, table[k].mcc, -ordered.index(k)))
    return best, table
