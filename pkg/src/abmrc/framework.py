"""Two-level reduced control loop: cluster, project, control, lift, advance.

The same loop covers three strategies through its configuration:

* clustering on, POD on: the two-level framework;
* clustering on, POD off (``pod_mode="off"``): control of cluster centers only;
* clustering off, POD on: control of the POD-reduced agent model.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import cluster_centers, dbscan, epsilon_heuristic, singleton_partition
from .control import OcpConfig, forward_backward_sweep, running_cost
from .errors import ConfigurationError, ContractError, IntegrationError, NumericError, SnapshotError, SweepError
from .model import consensus_parameter, interaction_drift
from .numerics import Trajectory, rk4_step
from .reduction import assemble_snapshots, identity_basis, pod_basis, lift_state, project_state
from .report import RunReport

__all__ = [
    "FrameworkConfig",
    "StepDiagnostics",
    "warmup",
    "broadcast_controls",
    "two_level_step",
    "run_two_level",
]

POD_MODES = ("absolute", "relative", "off")
EPS_MODES = ("refresh", "frozen")
SNAPSHOT_SOURCES = ("agents", "centers")


@dataclass(frozen=True)
class FrameworkConfig:
    """Settings of the reduced control loop.

    ``eps=None`` selects the Frobenius-norm heuristic, evaluated on the current
    states (``eps_mode="refresh"``) or once on the initial states
    (``eps_mode="frozen"``). ``horizon_steps`` of ``ocp`` sets how far past the
    current time the reduced problem looks.
    """

    warmup_steps: int = 20
    h_t: float = 0.05
    consensus_tol: float = 1e-8
    ocp: OcpConfig = field(default_factory=OcpConfig)
    pod_tau: float = 1e-3
    pod_mode: str = "relative"
    clustering: bool = True
    eps: float | None = None
    eps_mode: str = "refresh"
    min_pts: int = 1
    snapshot_source: str = "agents"
    max_outer_steps: int = 5000

    def __post_init__(self):
        if self.pod_mode not in POD_MODES:
            raise ConfigurationError(f"pod_mode must be one of {POD_MODES}")
        if self.eps_mode not in EPS_MODES:
            raise ConfigurationError(f"eps_mode must be one of {EPS_MODES}")
        if self.snapshot_source not in SNAPSHOT_SOURCES:
            raise ConfigurationError(f"snapshot_source must be one of {SNAPSHOT_SOURCES}")
        if not self.h_t > 0 or not self.consensus_tol > 0:
            raise ConfigurationError("h_t and consensus_tol must be positive")
        if self.eps is not None and not self.eps >= 0:
            raise ConfigurationError("eps must be nonnegative")
        if int(self.min_pts) != self.min_pts or self.min_pts < 1:
            raise ConfigurationError("min_pts must be a positive integer")
        if self.max_outer_steps < 1:
            raise ConfigurationError("max_outer_steps must be positive")
        min_warmup = 1 if self.pod_mode != "off" else 0
        if int(self.warmup_steps) != self.warmup_steps or self.warmup_steps < min_warmup:
            raise ConfigurationError(f"warmup_steps must be an integer >= {min_warmup}")


@dataclass
class StepDiagnostics:
    K: int | None
    r: int | None
    cost: float
    phases: dict
    wall_ms: float
    iterations: int | None = None
    eps: float | None = None
    fallback: dict | None = None
    basis: object = None


def warmup(X0, kernel, cfg, t0=0.0):
    """Uncontrolled integration over ``[t0, t0 + warmup_steps * h_t]``."""
    X = np.array(X0, dtype=float)
    states = [X]
    for k in range(cfg.warmup_steps):
        X = rk4_step(lambda t, Y: interaction_drift(Y, kernel), X, t0 + k * cfg.h_t, cfg.h_t)
        states.append(X)
    return Trajectory(t0 + cfg.h_t * np.arange(cfg.warmup_steps + 1), np.stack(states))


def broadcast_controls(u_hat, partition):
    """Give every agent the control row of its cluster."""
    u_hat = np.asarray(u_hat, dtype=float)
    labels = partition.labels
    if labels.size and (labels.min() < 0 or labels.max() >= u_hat.shape[0]):
        raise ContractError(f"cluster label out of range for {u_hat.shape[0]} cluster controls")
    return u_hat[labels]


def _snapshot_states(window, partition, source):
    states = np.stack(window)
    if source == "agents":
        return states
    return np.stack([cluster_centers(Y, partition).centers for Y in states])


def two_level_step(X, t, kernel, cfg, window, eps=None, prev_basis=None):
    """One outer iteration of the reduced control loop.

    ``window`` holds the last ``warmup_steps + 1`` full states ending at ``X``;
    it is not modified. Returns the next full state and the step diagnostics.
    Failures of the basis extraction fall back to ``prev_basis`` (or skip the
    control); sweep failures fall back to zero control. Both are recorded in
    ``StepDiagnostics.fallback``.
    """
    X = np.asarray(X, dtype=float)
    N, d = X.shape
    phases = {}
    fallback = None
    start = time.perf_counter()

    # clustering
    if cfg.clustering:
        if eps is None:
            eps = cfg.eps if cfg.eps is not None else epsilon_heuristic(X)
        partition = dbscan(X, eps, cfg.min_pts)
    else:
        partition = singleton_partition(N)
    centers = cluster_centers(X, partition)
    tick = time.perf_counter()
    phases["cluster"] = 1e3 * (tick - start)

    # reduced basis
    basis = None
    if cfg.pod_mode == "off":
        basis = identity_basis(d)
    else:
        try:
            snaps = assemble_snapshots(_snapshot_states(window, partition, cfg.snapshot_source))
            basis = pod_basis(snaps, cfg.pod_tau, cfg.pod_mode)
        except SnapshotError as exc:
            basis = prev_basis
            fallback = {"phase": "svd", "message": str(exc), "reused_basis": basis is not None}
    reduced = project_state(basis, centers.centers) if basis is not None else None
    tock = time.perf_counter()
    phases["svd"] = 1e3 * (tock - tick)

    # reduced optimal control
    u_hat = None
    iterations = None
    if reduced is not None:
        try:
            sol = forward_backward_sweep(
                reduced, kernel, cfg.ocp, cfg.h_t, weights=centers.weights, total=N
            )
            u_hat = sol.controls[0]
            iterations = sol.iterations
        except (SweepError, IntegrationError, NumericError) as exc:
            fallback = {"phase": "ocp", "message": str(exc)}
    tack = time.perf_counter()
    phases["ocp"] = 1e3 * (tack - tock)

    # broadcast, lift, advance the full ensemble
    if u_hat is None:
        U = np.zeros_like(X)
    else:
        U = lift_state(basis, broadcast_controls(u_hat, partition))
    X_next = rk4_step(lambda s, Y: interaction_drift(Y, kernel) + U, X, t, cfg.h_t)
    end = time.perf_counter()
    phases["advance"] = 1e3 * (end - tack)

    return X_next, StepDiagnostics(
        K=partition.K if cfg.clustering else None,
        r=basis.r if (basis is not None and cfg.pod_mode != "off") else None,
        cost=running_cost(X, U, cfg.ocp.gamma),
        phases=phases,
        wall_ms=1e3 * (end - start),
        iterations=iterations,
        eps=eps,
        fallback=fallback,
        basis=basis,
    )


def run_two_level(X0, kernel, cfg, t0=0.0, store_states=False, strategy="two_level"):
    """Warm up uncontrolled, then repeat :func:`two_level_step` until consensus.

    Stops when the consensus parameter drops below ``cfg.consensus_tol`` or
    after ``cfg.max_outer_steps`` controlled steps.
    """
    X = np.array(X0, dtype=float)
    h_t = cfg.h_t
    report = RunReport(h_t=h_t, strategy=strategy, consensus_tol=cfg.consensus_tol)
    if store_states:
        report.states = []
    frozen_eps = None
    if cfg.clustering and cfg.eps is None and cfg.eps_mode == "frozen":
        frozen_eps = epsilon_heuristic(X)
    report.meta["eps_mode"] = "explicit" if cfg.eps is not None else cfg.eps_mode

    window = deque([X.copy()], maxlen=cfg.warmup_steps + 1)
    t = t0
    for k in range(cfg.warmup_steps):
        tic = time.perf_counter()
        X_next = rk4_step(lambda s, Y: interaction_drift(Y, kernel), X, t, h_t)
        ms = 1e3 * (time.perf_counter() - tic)
        if report.states is not None:
            report.states.append(X.copy())
        report.append(
            t, consensus_parameter(X), cost=running_cost(X, np.zeros_like(X), cfg.ocp.gamma),
            wall_ms=ms, phases={"warmup": ms},
        )
        X = X_next
        window.append(X.copy())
        t = t0 + (k + 1) * h_t
    report.meta["control_start"] = t

    basis = None
    eps_used = []
    for m in range(cfg.max_outer_steps + 1):
        chi = consensus_parameter(X)
        if report.states is not None:
            report.states.append(X.copy())
        if chi < cfg.consensus_tol or m == cfg.max_outer_steps:
            report.append(t, chi)
            break
        X_next, diag = two_level_step(X, t, kernel, cfg, window, eps=frozen_eps, prev_basis=basis)
        if diag.basis is not None:
            basis = diag.basis
        if diag.fallback is not None:
            report.fallbacks.append({"step": len(report.times), "time": t, **diag.fallback})
        if diag.eps is not None:
            eps_used.append(diag.eps)
        report.append(
            t, chi, K=diag.K, r=diag.r, cost=diag.cost, wall_ms=diag.wall_ms,
            phases=diag.phases, iterations=diag.iterations,
        )
        X = X_next
        window.append(X.copy())
        t = t0 + (cfg.warmup_steps + m + 1) * h_t
    report.consensus_reached = report.final_consensus < cfg.consensus_tol
    if eps_used:
        report.meta["eps_first"] = eps_used[0]
        report.meta["eps_last"] = eps_used[-1]
    return report


def with_overrides(cfg, **changes):
    """Copy of ``cfg`` with some fields replaced (validated again)."""
    return replace(cfg, **changes)
