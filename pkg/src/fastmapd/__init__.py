"""Potential-field embeddings of directed graphs.

Phase 1 embeds to-and-fro average shortest-path distances in Euclidean
space by pivot projection; phase 2 learns a potential over those
coordinates whose differences model the directional asymmetry.
"""

__version__ = "0.1.0"

from .embed import EmbedConfig, Embedding, embed_average_distances
from .evaluation import nrmse, odot_distance, sweep
from .graph import DirectedGraph, GridMap, grid_to_directed_graph, load_movingai_map, reverse_graph
from .paths import all_pairs_oracle, average_distance, sssp
from .potential import PolynomialModel, assign_last_coordinate, fit_potential, lasso_fit

__all__ = [
    "DirectedGraph", "GridMap", "load_movingai_map", "grid_to_directed_graph", "reverse_graph",
    "sssp", "average_distance", "all_pairs_oracle",
    "EmbedConfig", "Embedding", "embed_average_distances",
    "PolynomialModel", "lasso_fit", "fit_potential", "assign_last_coordinate",
    "odot_distance", "nrmse", "sweep",
]
