"""magus: a multiple-round recommender that guesses queries and items on a
word-combination graph and updates from per-round feedback."""

from .catalog import (
    Catalog,
    InteractionLog,
    Item,
    SessionSpec,
    build_sessions,
    gen_synthetic,
    load_catalog,
    load_catalog_dir,
    temporal_split,
)
from .graph import RelationalGraph, build_graph, covering_edges, load_graph, node_lookup, save_graph
from .propagation import (
    Feedback,
    PropagationConfig,
    Recommendation,
    ScoreState,
    SessionTranscript,
    apply_feedback,
    init_scores,
    normalize,
    run_session,
    select_topn,
)
from .scorer import ScorerModel, load_scorer, save_scorer, score_items, train_matfact, train_popularity
from .simulator import UserAgent, compute_ra, compute_sa, compute_sac, run_benchmark
from .weights import NodeEmbeddingTable, propagate_features, train_weights

__version__ = "0.1.0"

__all__ = [
    "Catalog", "InteractionLog", "Item", "SessionSpec",
    "build_sessions", "gen_synthetic", "load_catalog", "load_catalog_dir", "temporal_split",
    "RelationalGraph", "build_graph", "covering_edges", "load_graph", "node_lookup", "save_graph",
    "Feedback", "PropagationConfig", "Recommendation", "ScoreState", "SessionTranscript",
    "apply_feedback", "init_scores", "normalize", "run_session", "select_topn",
    "ScorerModel", "load_scorer", "save_scorer", "score_items", "train_matfact", "train_popularity",
    "UserAgent", "compute_ra", "compute_sa", "compute_sac", "run_benchmark",
    "NodeEmbeddingTable", "propagate_features", "train_weights",
    "__version__",
]
