"""Product quantization for tabular data.

Train per-subspace k-means codebooks, encode rows into compact codes whose
mixed-radix collapse doubles as a class label, answer approximate
nearest-neighbor ("analog") queries through lookup-table distances and an
inverted index, and sweep (subspaces x centroids) grids with Pareto-front
extraction of the error/time trade-off.
"""

from . import errors, kmeans, persistence, pq, preprocess, report, search, sweep
from .errors import SoilPQError
from .kmeans import KMeansModel
from .pq import Codebook, CodeMatrix
from .preprocess import CleanSummary, Dataset, RawTable, Scaler, ScalerColumn
from .search import InvertedIndex, Neighbor
from .sweep import ParetoPoint, SweepRecord

__version__ = "0.1.0"

__all__ = [
    "errors",
    "kmeans",
    "persistence",
    "pq",
    "preprocess",
    "report",
    "search",
    "sweep",
    "SoilPQError",
    "KMeansModel",
    "Codebook",
    "CodeMatrix",
    "CleanSummary",
    "Dataset",
    "RawTable",
    "Scaler",
    "ScalerColumn",
    "InvertedIndex",
    "Neighbor",
    "ParetoPoint",
    "SweepRecord",
    "__version__",
]
