"""First-order opinion dynamics: influence kernels, drift terms, consensus diagnostics.

Agent states are stored as ``(N, d)`` float arrays, one row per agent. Row order
is the agent identity and nothing in this module permutes rows.

All pairwise sums are evaluated densely in a single chunk (no row
partitioning), which keeps reductions bit-reproducible on one platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from .errors import ContractError, DomainError

__all__ = [
    "InfluenceKernel",
    "ghk_eval",
    "ghk_derivative",
    "check_ensemble",
    "pairwise_distances",
    "interaction_drift",
    "rhs_uncontrolled",
    "rhs_controlled",
    "mean_state",
    "consensus_parameter",
]


def _check_alpha(alpha):
    if not (math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be finite and positive, got {alpha!r}")


def _check_distance(s):
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise DomainError("kernel argument must be finite")
    if np.any(s < 0):
        raise DomainError("kernel argument must be nonnegative")
    return s


def ghk_eval(s, alpha):
    """Smoothed generalized Hegselmann-Krause kernel.

    ``(1 - sig(alpha (s - 1))) / (1 - sig(-alpha))``, rewritten as
    ``sig(alpha (1 - s)) / sig(alpha)`` so that large ``alpha`` underflows
    gracefully instead of cancelling to zero.
    """
    _check_alpha(alpha)
    s = _check_distance(s)
    out = expit(alpha * (1.0 - s)) / expit(alpha)
    return out if out.ndim else float(out)


def ghk_derivative(s, alpha):
    """Derivative of :func:`ghk_eval` with respect to the distance ``s``."""
    _check_alpha(alpha)
    s = _check_distance(s)
    y = alpha * (1.0 - s)
    out = -alpha * expit(y) * expit(-y) / expit(alpha)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class InfluenceKernel:
    """Interaction function ``phi`` of the inter-agent distance.

    ``kind`` is ``"ghk"`` (smoothed Hegselmann-Krause with smoothness ``alpha``)
    or ``"constant"`` (``phi = c`` everywhere).
    """

    kind: str = "ghk"
    alpha: float = 1.6
    c: float = 1.0

    def __post_init__(self):
        if self.kind == "ghk":
            _check_alpha(self.alpha)
        elif self.kind == "constant":
            if not (0.0 < self.c <= 1.0):
                raise DomainError(f"constant kernel value must lie in (0, 1], got {self.c!r}")
        else:
            raise DomainError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def ghk(cls, alpha):
        return cls("ghk", alpha=float(alpha))

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", c=float(c))

    def value(self, s):
        if self.kind == "ghk":
            return ghk_eval(s, self.alpha)
        s = _check_distance(s)
        out = np.full(s.shape, self.c)
        return out if out.ndim else float(out)

    def derivative(self, s):
        if self.kind == "ghk":
            return ghk_derivative(s, self.alpha)
        s = _check_distance(s)
        out = np.zeros(s.shape)
        return out if out.ndim else 0.0

    def matrix(self, D, derivative=False):
        """Unchecked evaluation on a distance matrix known to be finite and nonnegative.

        Returns ``phi(D)``, or ``(phi(D), phi'(D))`` when ``derivative`` is set.
        """
        if self.kind == "constant":
            phi = np.full(D.shape, self.c)
            return (phi, np.zeros(D.shape)) if derivative else phi
        y = self.alpha * (1.0 - D)
        scale = 1.0 / expit(self.alpha)
        up = expit(y)
        phi = up * scale
        if not derivative:
            return phi
        return phi, (-self.alpha * scale) * up * expit(-y)

    def to_dict(self):
        if self.kind == "ghk":
            return {"kind": "ghk", "alpha": self.alpha}
        return {"kind": "constant", "c": self.c}

    @classmethod
    def from_dict(cls, spec):
        kind = spec.get("kind", "ghk")
        if kind == "ghk":
            return cls.ghk(spec["alpha"])
        if kind == "constant":
            return cls.constant(spec.get("c", 1.0))
        raise DomainError(f"unknown kernel kind {kind!r}")


def check_ensemble(X) -> np.ndarray:
    """Return ``X`` as a 2-D float array, raising if it is empty or non-finite."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ContractError(f"expected a non-empty (N, d) matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ContractError("agent states must be finite")
    return X


def pairwise_distances(X):
    """Center ``X`` and return ``(Xc, D)`` with exact Euclidean distances ``D``.

    Centering is harmless (the dynamics only see differences) and keeps the
    matrix-product form of the pairwise sums free of cancellation near
    consensus.
    """
    Xc = X - X.mean(axis=0)
    return Xc, cdist(Xc, Xc)


def interaction_drift(X, kernel, weights=None, total=None):
    """Weighted interaction term shared by every first-order model in the package.

    Row ``l`` is ``(1/total) * sum_m w_m phi(|x_l - x_m|) (x_m - x_l)``. With unit
    weights and ``total = N`` this is the full agent model; with cluster sizes
    as weights it is the center-of-mass model.

    The pairwise sum is evaluated as ``Phi @ X - rowsum(Phi) * X`` over the
    dense ``(N, N)`` kernel matrix, which is still the O(N^2 d) sum but runs
    through BLAS.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if total is None:
        total = n
    Xc, D = pairwise_distances(X)
    phi = kernel.matrix(D)
    if weights is not None:
        phi = phi * np.asarray(weights, dtype=float)[None, :]
    return (phi @ Xc - phi.sum(axis=1)[:, None] * Xc) / total


def rhs_uncontrolled(X, kernel):
    """Drift of the uncontrolled agent model."""
    return interaction_drift(check_ensemble(X), kernel)


def rhs_controlled(X, U, kernel):
    """Drift of the controlled agent model, ``rhs_uncontrolled + U``."""
    X = check_ensemble(X)
    U = np.asarray(U, dtype=float)
    if U.shape != X.shape:
        raise ContractError(f"control shape {U.shape} does not match state shape {X.shape}")
    return interaction_drift(X, kernel) + U


def mean_state(X):
    return np.asarray(X, dtype=float).mean(axis=0)


def consensus_parameter(X) -> float:
    """Mean squared deviation from the mean state, scaled by ``1/N**2``."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    dev = X - X.mean(axis=0)
    return float(np.sum(dev * dev) / n**2)
