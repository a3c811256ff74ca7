"""Coordinated-messaging detection: a kNN post-similarity graph is projected
through authorship onto users and pruned to its strongest links."""

__version__ = "0.1.0"

from .analysis import (
    ClusterReport,
    EngagementStats,
    connected_components,
    edge_counts,
    engagement_stats,
    top_terms,
    weighted_degree,
)
from .classify import ClassAssignment, UserClassTable, class_census, classify_corpus, classify_user
from .corpus import Corpus, Post, User, dump_corpus, filter_originals, load_corpus
from .errors import CoordnetError, EmptyCoreWarning
from .induce import CoordinationGraph, IncidenceMatrix, build_incidence, induce, prune
from .knn import KnnAdjacency, SimilarityGraph, build_knn, default_k, symmetrize
from .synth import GroundTruth, ScenarioConfig, generate_scenario, score_detection
from .vectorize import EmbeddingMatrix, embed_builtin, embed_corpus, import_embeddings, write_embeddings
