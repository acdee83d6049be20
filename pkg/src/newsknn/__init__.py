"""Diversity-aware session-kNN news recommendation and its offline evaluation."""

from .diversity import DiversityContext, candidate_diversity, mmr_rerank, session_diversity
from .kernels import (
    DecayScheme,
    cosine,
    cosine_dissimilarity,
    idf_weight,
    last_shared_position_weight,
    neighbor_position_weight,
    recency_weight,
    session_vector,
)
from .recommenders import (
    METHODS,
    VARIANTS,
    HyperParams,
    NeighborhoodRecommender,
    RecommendationList,
    ScoredItem,
    find_neighbors,
    recommend,
    score_sknn,
    score_stan,
    score_vsknn,
    score_vstan,
)
from .sessions import (
    EmbeddingStore,
    Event,
    ItemCatalog,
    Session,
    SessionCorpus,
    SessionIndex,
    build_index,
    ingest_events,
    load_catalog,
    load_corpus,
    load_embeddings,
    sample_candidate_sessions,
    validate_coverage,
)

__version__ = "0.1.0"
