"""Resolution and end-to-end quality metrics, plus the paired significance test.

Resolution quality is set precision/recall of associated records per query.
End-to-end accuracy compares completed profiles against ground truth with a
similarity that is 1.0 for identical values (percentage difference for
numbers, normalized edit distance for text, both taken as similarities).
Two runs over the same queries are compared with a two-sided paired
Student's t-test whose tail probability comes from a continued-fraction
regularized incomplete beta, validated against published critical values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from entprof.model import NUMERIC, ValidationError
from entprof.similarity import levenshtein_similarity, numeric_similarity


def precision_recall(true_ids, predicted_ids):
    """Set precision and recall of a predicted association set.

    Degenerate cases: an empty prediction has precision 1 only when nothing
    should have been found; an empty truth set has recall 1 only when
    nothing was predicted.
    """
    true_set = set(true_ids)
    predicted_set = set(predicted_ids)
    hits = len(true_set & predicted_set)
    if predicted_set:
        precision = hits / len(predicted_set)
    else:
        precision = 1.0 if not true_set else 0.0
    if true_set:
        recall = hits / len(true_set)
    else:
        recall = 1.0 if not predicted_set else 0.0
    return precision, recall


def truth_similarity(v1, v2):
    """Similarity of a profiled value to its ground-truth value, in [0, 1].

    Mismatched kinds score 0. Identical values score exactly 1.
    """
    numeric_1 = isinstance(v1, (int, float)) and not isinstance(v1, bool)
    numeric_2 = isinstance(v2, (int, float)) and not isinstance(v2, bool)
    if numeric_1 != numeric_2:
        return 0.0
    if numeric_1:
        return numeric_similarity(v1, v2)
    return levenshtein_similarity(v1, v2)


def per_query_accuracy(profiles, truth, schema):
    """Mean attribute similarity to truth, per profile.

    Attributes the truth tuple leaves missing are excluded from the mean; a
    profiled value that is missing where truth has one scores 0.
    """
    result = {}
    for profile in profiles:
        if profile.query_id not in truth:
            raise ValidationError(f"no truth entry for query {profile.query_id!r}")
        truth_values = truth[profile.query_id]
        scores = []
        for value, expected in zip(profile.values, truth_values):
            if expected is None:
                continue
            scores.append(0.0 if value is None else truth_similarity(value, expected))
        if not scores:
            raise ValidationError(f"truth for query {profile.query_id!r} is all-missing")
        result[profile.query_id] = sum(scores) / len(scores)
    return result


def accuracy(profiles, truth, schema):
    """Mean of per-query accuracies over all profiles."""
    profiles = list(profiles)
    if not profiles:
        raise ValidationError("accuracy over zero profiles is undefined")
    per_query = per_query_accuracy(profiles, truth, schema)
    return sum(per_query.values()) / len(per_query)


@dataclass(frozen=True)
class RunMetrics:
    """Per-query resolution and accuracy figures for one evaluation run."""

    precision: dict
    recall: dict
    accuracy: dict

    def aggregates_pct(self):
        def mean_pct(values):
            return 100.0 * sum(values.values()) / len(values) if values else 0.0

        return {
            "precision_pct": mean_pct(self.precision),
            "recall_pct": mean_pct(self.recall),
            "accuracy_pct": mean_pct(self.accuracy),
        }


# ---------------------------------------------------------------------------
# Student's t distribution (two-sided tail)
# ---------------------------------------------------------------------------


def _beta_continued_fraction(a, b, x, max_iterations=300, epsilon=1e-15):
    """Lentz's continued fraction for the incomplete beta integral."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iterations + 1):
        m2 = 2 * m
        numerator = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < epsilon:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a, b, x):
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def t_two_sided_p(t, df):
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df < 1:
        raise ValidationError("degrees of freedom must be at least 1")
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


@dataclass(frozen=True)
class TTestResult:
    t_value: float
    p_value: float
    effect_size: float
    df: int


def paired_t_test(sample_a, sample_b):
    """Two-sided paired Student's t-test over per-query metric lists.

    Effect size is the paired Cohen's d, |mean(d)| / sd(d) with the sample
    standard deviation (n - 1 denominator).
    """
    if len(sample_a) != len(sample_b):
        raise ValidationError("paired samples must have equal length")
    n = len(sample_a)
    if n < 2:
        raise ValidationError("paired t-test needs at least 2 pairs")
    diffs = [a - b for a, b in zip(sample_a, sample_b)]
    mean = sum(diffs) / n
    variance = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(variance)
    if sd == 0.0:
        raise ValidationError("all paired differences are identical; test is degenerate")
    t = mean / (sd / math.sqrt(n))
    return TTestResult(
        t_value=t,
        p_value=t_two_sided_p(t, n - 1),
        effect_size=abs(mean) / sd,
        df=n - 1,
    )


def render_report(payload):
    """Serialize a report document with stable key order (byte-reproducible)."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
