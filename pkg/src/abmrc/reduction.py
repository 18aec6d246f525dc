"""POD bases from snapshot matrices and Galerkin-reduced agent dynamics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractError, SnapshotError
from .model import consensus_parameter, interaction_drift
from .numerics import Trajectory, truncated_svd

__all__ = [
    "SnapshotMatrix",
    "ReducedBasis",
    "ConsensusLiftReport",
    "assemble_snapshots",
    "pod_basis",
    "identity_basis",
    "project_state",
    "lift_state",
    "rhs_reduced_full",
    "rhs_reduced_clustered",
    "verify_consensus_lift",
]

RANK_MODES = ("absolute", "relative")


@dataclass(frozen=True)
class SnapshotMatrix:
    """``d x (entities * samples)`` matrix, columns ordered entity-major then time."""

    data: np.ndarray
    window: tuple
    entities: int
    samples: int


@dataclass(frozen=True)
class ReducedBasis:
    basis: np.ndarray
    singular_values: np.ndarray
    threshold_used: float

    @property
    def r(self):
        return self.basis.shape[1]

    @property
    def d(self):
        return self.basis.shape[0]


def assemble_snapshots(source, window=None):
    """Stack sampled states into a snapshot matrix.

    ``source`` is a :class:`Trajectory` or an array of shape
    ``(samples, entities, d)``. Column ``i * samples + k`` holds entity ``i`` at
    sample ``k``. ``window = (t_first, t_last)`` restricts a trajectory to the
    samples inside that closed interval.
    """
    if isinstance(source, Trajectory):
        times, states = source.times, source.states
    else:
        states = np.asarray(source, dtype=float)
        times = np.arange(states.shape[0], dtype=float)
    if states.ndim != 3:
        raise ContractError(f"expected (samples, entities, d) states, got shape {states.shape}")
    if window is not None:
        lo, hi = window
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        keep = (times >= lo - slack) & (times <= hi + slack)
        times, states = times[keep], states[keep]
    if states.shape[0] == 0:
        raise SnapshotError(f"snapshot window {window} contains no samples")
    samples, entities, d = states.shape
    data = np.ascontiguousarray(states.transpose(2, 1, 0).reshape(d, entities * samples))
    return SnapshotMatrix(data, (float(times[0]), float(times[-1])), entities, samples)


def pod_basis(S, tau=1e-3, mode="relative"):
    """Leading left singular vectors of the snapshots.

    Keeps ``sigma_i >= tau`` (``mode="absolute"``) or ``sigma_i / sigma_1 >= tau``
    (``mode="relative"``), never fewer than one vector.
    """
    if mode not in RANK_MODES:
        raise ConfigurationError(f"rank mode must be one of {RANK_MODES}, got {mode!r}")
    if not tau >= 0:
        raise ConfigurationError("tau must be nonnegative")
    data = S.data if isinstance(S, SnapshotMatrix) else np.asarray(S, dtype=float)
    threshold = {}

    def rule(sigma):
        cut = tau if mode == "absolute" else tau * sigma[0]
        threshold["value"] = cut
        return max(1, int(np.sum(sigma >= cut)))

    svd = truncated_svd(data, keep=rule)
    if svd.rank == 0:
        raise SnapshotError("snapshot matrix is zero; no basis can be extracted")
    return ReducedBasis(svd.left, svd.singular_values, float(threshold["value"]))


def identity_basis(d):
    """Trivial basis ``r = d``: reduction switched off."""
    return ReducedBasis(np.eye(d), np.ones(d), 0.0)


def project_state(B, x):
    """Reduced coordinates ``Psi^T x``; rows of a matrix are projected independently."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != B.d:
        raise ContractError(f"state dimension {x.shape[-1]} does not match basis dimension {B.d}")
    return x @ B.basis


def lift_state(B, xr):
    """Full-space vector ``Psi xr`` (row-wise for matrices)."""
    xr = np.asarray(xr, dtype=float)
    if xr.shape[-1] != B.r:
        raise ContractError(f"reduced dimension {xr.shape[-1]} does not match basis rank {B.r}")
    return xr @ B.basis.T


def rhs_reduced_full(Xr, kernel):
    """Galerkin-reduced agent drift; distances are taken in the reduced space."""
    return interaction_drift(np.asarray(Xr, dtype=float), kernel)


def rhs_reduced_clustered(Cr, weights, total_agents, kernel):
    weights = np.asarray(weights)
    if weights.sum() != total_agents:
        raise ContractError(f"weights sum to {weights.sum()}, expected {total_agents}")
    return interaction_drift(np.asarray(Cr, dtype=float), kernel, weights, total_agents)


@dataclass
class ConsensusLiftReport:
    reduced: np.ndarray
    lifted: np.ndarray

    @property
    def max_abs_difference(self):
        return float(np.max(np.abs(self.reduced - self.lifted)))

    def __len__(self):
        return len(self.reduced)


def verify_consensus_lift(B, reduced_states):
    """Compare consensus parameters of reduced states and their lifts, sample by sample."""
    if isinstance(reduced_states, Trajectory):
        reduced_states = reduced_states.states
    reduced_states = np.asarray(reduced_states, dtype=float)
    if reduced_states.ndim == 2:
        reduced_states = reduced_states[None]
    red = np.array([consensus_parameter(Z) for Z in reduced_states])
    lif = np.array([consensus_parameter(lift_state(B, Z)) for Z in reduced_states])
    return ConsensusLiftReport(red, lif)
