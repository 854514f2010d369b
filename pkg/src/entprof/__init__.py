"""Entity profile completion from multi-source structured records.

Two phases: a trained classifier links records to partially filled queries
(resolution), then missing attributes are filled from the linked records
using biased source ratings and the similarity-frequency product
(selection).
"""

from entprof.model import (
    Dataset,
    ParseError,
    Query,
    Record,
    Schema,
    Source,
    ValidationError,
    load_dataset,
    load_queries,
    load_schema,
    load_truth,
    validate,
)
from entprof.similarity import (
    DEFAULT_CONFIG,
    EmbeddingStore,
    SimilarityConfig,
    attribute_similarity,
    embedding_similarity,
    levenshtein_similarity,
    numeric_similarity,
    query_record_similarity,
    record_similarity,
)
from entprof.sources import (
    SourceRatings,
    SourceSimilarityMatrix,
    TrustReport,
    build_source_similarity_matrix,
    source_ratings,
    trustworthiness_scores,
    uniform_ratings,
)
from entprof.classify import (
    CLASSIFIER_KINDS,
    LabeledExample,
    build_training_set,
    cv_error,
    extract_features,
    f1_score,
    mcc,
    predict,
    roc_auc,
    select_model,
    train,
)
from entprof.profiling import (
    CompletedProfile,
    build_attribute_value_sets,
    complete_profile,
    resolve,
    select_attribute_value,
    sim_attribute_val,
    similarity_frequency_product,
)
from entprof.evaluate import (
    TTestResult,
    accuracy,
    paired_t_test,
    precision_recall,
    truth_similarity,
)
from entprof.corrupt import CorruptionPlan, inject_ambiguities, inject_errors, make_queries

__version__ = "0.1.0"
