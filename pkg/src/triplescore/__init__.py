"""Scoring of knowledge-base triples for type-like relations on a 0..7 scale."""

__version__ = "0.1.0"

from .corpus import (
    AbstractStore,
    AnnotatedSentence,
    KnowledgeBase,
    LabeledPair,
    default_stopwords,
    load_abstracts,
    load_kb,
    load_labeled_pairs,
    load_sentences,
    load_stopwords,
    normalize_entity_id,
    parse_sentence_line,
    tokenize,
)
from .embeddings import Centroid, EmbeddingStore, centroid, cosine, load_embeddings, paragraph_centroid
from .errors import DataFormatError, SchemaMismatchError, TripleScoreError
from .evaluation import (
    EvaluationReport,
    accuracy,
    asd,
    cross_validate,
    importance_report,
    kendall_distance,
)
from .features import (
    NATIONALITY_SCHEMA,
    PROFESSION_SCHEMA,
    FeatureContext,
    FeatureVector,
    nationality_features,
    profession_features,
)
from .index import SentenceIndex, build_index, load_index, save_index
from .model import (
    ForestParams,
    RegressionForest,
    feature_importance,
    load_forest,
    map_score,
    predict,
    save_forest,
    train,
)
from .profiles import ProfileStore, WeightedTermVector

__all__ = [
    "AbstractStore",
    "AnnotatedSentence",
    "Centroid",
    "DataFormatError",
    "EmbeddingStore",
    "EvaluationReport",
    "FeatureContext",
    "FeatureVector",
    "ForestParams",
    "KnowledgeBase",
    "LabeledPair",
    "NATIONALITY_SCHEMA",
    "PROFESSION_SCHEMA",
    "ProfileStore",
    "RegressionForest",
    "SchemaMismatchError",
    "SentenceIndex",
    "TripleScoreError",
    "WeightedTermVector",
    "accuracy",
    "asd",
    "build_index",
    "centroid",
    "cosine",
    "cross_validate",
    "default_stopwords",
    "feature_importance",
    "importance_report",
    "kendall_distance",
    "load_abstracts",
    "load_embeddings",
    "load_forest",
    "load_index",
    "load_kb",
    "load_labeled_pairs",
    "load_sentences",
    "load_stopwords",
    "map_score",
    "nationality_features",
    "normalize_entity_id",
    "parse_sentence_line",
    "paragraph_centroid",
    "predict",
    "profession_features",
    "save_forest",
    "save_index",
    "tokenize",
    "train",
]
