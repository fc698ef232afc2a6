"""Field-aware matching of heterogeneous documents.

Core pieces: a text pipeline (tokens -> lexemes -> stopwords -> synonyms),
per-field inverted indexes with tf-idf, a weighted-cosine similarity
network with trainable cross-field weights, and fitters that learn those
weights from human match judgments.
"""

from .errors import (
    ConfigError,
    DimensionError,
    DuplicateDocument,
    EmptyDataset,
    HetmatchError,
    NotFound,
    TrainError,
)
from .index import Corpus, Document, PairVectorSource
from .simnet import MatchDecision, SimilarityBreakdown, WeightConfig

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Corpus",
    "DimensionError",
    "Document",
    "DuplicateDocument",
    "EmptyDataset",
    "HetmatchError",
    "MatchDecision",
    "NotFound",
    "PairVectorSource",
    "SimilarityBreakdown",
    "TrainError",
    "WeightConfig",
    "__version__",
]
