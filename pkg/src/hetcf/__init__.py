"""Text-enriched heterogeneous-graph collaborative filtering.

Builds a typed graph over users, items, descriptions, and comments; spreads
text-derived node vectors through a parameter-free normalized propagation;
scores user-item pairs with a hybrid representation/matching network trained
by pairwise ranking; and evaluates leave-one-out top-k recommendation.
"""

__version__ = "0.1.0"

from .config import RunConfig
from .corpus import InteractionCorpus, build_corpus, parse_descriptions, parse_reviews
from .evaluator import MetricReport, evaluate_model
from .experiment import run_experiment, sweep
from .graph import HeteroGraph, build_graph
from .kernels import BACKEND
from .propagate import PropagationConfig, run_embedding_network
from .trainer import TrainResult, train

__all__ = [
    "BACKEND",
    "HeteroGraph",
    "InteractionCorpus",
    "MetricReport",
    "PropagationConfig",
    "RunConfig",
    "TrainResult",
    "build_corpus",
    "build_graph",
    "evaluate_model",
    "parse_descriptions",
    "parse_reviews",
    "run_embedding_network",
    "run_experiment",
    "sweep",
    "train",
    "__version__",
]
