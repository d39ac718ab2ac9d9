from .dense import DimensionMismatch, ExactDenseIndex, HnswIndex
from .sparse import ScoredCandidate, SparseIndex, tokenize
from .store import FORMAT_VERSION, HybridIndex, SnapshotError

__all__ = [
    "DimensionMismatch",
    "ExactDenseIndex",
    "HnswIndex",
    "ScoredCandidate",
    "SparseIndex",
    "tokenize",
    "FORMAT_VERSION",
    "HybridIndex",
    "SnapshotError",
]
