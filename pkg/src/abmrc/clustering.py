"""Density-based agent clustering and the center-of-mass model.

Cluster labels are 0-based and ordered by the smallest agent index each
cluster contains, so ``labels[0] == 0`` always.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ContractError, DomainError
from .model import interaction_drift

__all__ = [
    "ClusterPartition",
    "ClusterEnsemble",
    "epsilon_heuristic",
    "dbscan",
    "singleton_partition",
    "cluster_centers",
    "rhs_clustered",
]


@dataclass(frozen=True)
class ClusterPartition:
    labels: np.ndarray

    @classmethod
    def from_labels(cls, labels):
        """Build a partition from arbitrary labels, renumbering by first occurrence."""
        labels = np.asarray(labels)
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first))
        return cls(order[inverse].astype(np.intp))

    @property
    def K(self):
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @property
    def N(self):
        return int(self.labels.size)

    @property
    def sizes(self):
        return np.bincount(self.labels, minlength=self.K)

    @property
    def index_sets(self):
        return [np.flatnonzero(self.labels == k) for k in range(self.K)]


@dataclass(frozen=True)
class ClusterEnsemble:
    """Cluster centers (``K x d``) with their sizes as integer weights."""

    centers: np.ndarray
    weights: np.ndarray
    total_agents: int

    @property
    def K(self):
        return self.centers.shape[0]


def epsilon_heuristic(X0):
    """Neighborhood radius ``||X0||_F / N`` from the global scale of the data."""
    X0 = np.asarray(X0, dtype=float)
    return float(np.linalg.norm(X0) / X0.shape[0])


def dbscan(X, eps, min_pts=1):
    """DBSCAN over Euclidean distance with inclusive neighborhoods (``dist <= eps``).

    The neighborhood of a point contains the point itself. Points that are
    neither core points nor reachable from one would be noise in classic
    DBSCAN; here each becomes a singleton cluster so that the result is always
    a full partition. With ``min_pts = 1`` every point is a core point and the
    clusters are the connected components of the eps-neighborhood graph.
    """
    if not eps >= 0:
        raise DomainError(f"eps must be nonnegative, got {eps!r}")
    if int(min_pts) != min_pts or min_pts < 1:
        raise DomainError(f"min_pts must be a positive integer, got {min_pts!r}")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    neighbors = cdist(X, X) <= eps
    core = neighbors.sum(axis=1) >= min_pts
    labels = np.full(n, -1, dtype=np.intp)
    next_id = 0
    for seed in range(n):
        if labels[seed] >= 0 or not core[seed]:
            continue
        labels[seed] = next_id
        queue = deque([seed])
        while queue:
            i = queue.popleft()
            if not core[i]:
                continue
            fresh = np.flatnonzero(neighbors[i] & (labels < 0))
            labels[fresh] = next_id
            queue.extend(fresh.tolist())
        next_id += 1
    noise = np.flatnonzero(labels < 0)
    labels[noise] = next_id + np.arange(noise.size)
    return ClusterPartition.from_labels(labels)


def singleton_partition(n):
    """Every agent in its own cluster."""
    return ClusterPartition(np.arange(n, dtype=np.intp))


def cluster_centers(X, partition):
    X = np.asarray(X, dtype=float)
    if partition.N != X.shape[0]:
        raise ContractError(f"partition covers {partition.N} agents, state has {X.shape[0]}")
    sizes = partition.sizes
    sums = np.zeros((partition.K, X.shape[1]))
    np.add.at(sums, partition.labels, X)
    return ClusterEnsemble(sums / sizes[:, None], sizes, X.shape[0])


def rhs_clustered(C, kernel):
    """Center-of-mass drift: ``(1/N) sum_m N_m phi(|c_l - c_m|) (c_m - c_l)``."""
    return interaction_drift(C.centers, kernel, C.weights, C.total_agents)
