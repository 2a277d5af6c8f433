"""Secure federated K-means clustering with exact machine unlearning.

Clients seed local centroids with K-means++, quantize them onto a shared
grid, and transmit masked power-sum syndromes of their per-bin counts;
the server decodes the exact aggregate, regenerates a surrogate dataset,
and clusters it. Removals are served by reseeding only the affected
centroid tail, which is provably equivalent to retraining from scratch.
"""

__version__ = "0.1.0"

from .clustering import (
    CentroidList,
    WeightedDataset,
    brute_force_optimal,
    federated_objective,
    kmeans_full,
    kmeanspp_init,
    lloyd,
    objective,
)
from .federation import (
    GlobalModel,
    RemovalRequest,
    TrainConfig,
    federated_train,
    federated_unlearn,
    load_checkpoint,
    save_checkpoint,
)
from .field import FieldElement, FieldModulus, select_prime
from .grid import GridSpec, fit_scale

__all__ = [
    "CentroidList",
    "FieldElement",
    "FieldModulus",
    "GlobalModel",
    "GridSpec",
    "RemovalRequest",
    "TrainConfig",
    "WeightedDataset",
    "brute_force_optimal",
    "federated_objective",
    "federated_train",
    "federated_unlearn",
    "fit_scale",
    "kmeans_full",
    "kmeanspp_init",
    "lloyd",
    "load_checkpoint",
    "objective",
    "save_checkpoint",
    "select_prime",
]
