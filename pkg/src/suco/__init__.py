"""Approximate k-nearest-neighbor search by subspace collision."""

from .core import Dataset, QueryResult
from .index import SucoIndex, build_index, load_index, save_index
from .query import knn_query
from .sc_linear import CollisionParams, sc_linear_query
from .subspace import sample_subspaces

__version__ = "0.1.0"

__all__ = [
    "CollisionParams",
    "Dataset",
    "QueryResult",
    "SucoIndex",
    "build_index",
    "knn_query",
    "load_index",
    "sample_subspaces",
    "save_index",
    "sc_linear_query",
]
