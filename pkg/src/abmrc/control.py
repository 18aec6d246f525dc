"""Pontryagin conditions, forward-backward sweep and receding-horizon control.

Every function accepts optional ``weights`` and ``total`` so the same code
drives the full agent model (unit weights, ``total = N``) and the cluster
center model (weights = cluster sizes, ``total`` = number of agents). The cost
is always normalized by the number of controlled entities (rows), and the
mean state in the cost is the unweighted row mean.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractError, NumericError, SweepError
from .model import consensus_parameter, interaction_drift, pairwise_distances
from .numerics import Trajectory, rk4_step
from .report import RunReport

__all__ = [
    "OcpConfig",
    "OcpSolution",
    "running_cost",
    "hamiltonian",
    "adjoint_rhs",
    "adjoint_operator",
    "control_from_costate",
    "forward_backward_sweep",
    "receding_horizon",
    "COINCIDENCE_TOL",
]

COINCIDENCE_TOL = 1e-12
DIVERGENCE_PATIENCE = 5


@dataclass(frozen=True)
class OcpConfig:
    gamma: float = 0.1
    horizon_steps: int = 10
    sweep_max_iters: int = 100
    sweep_tol: float = 1e-8
    relaxation: float = 0.5

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigurationError("gamma must be positive")
        if int(self.horizon_steps) != self.horizon_steps or self.horizon_steps < 1:
            raise ConfigurationError("horizon_steps must be a positive integer")
        if int(self.sweep_max_iters) != self.sweep_max_iters or self.sweep_max_iters < 1:
            raise ConfigurationError("sweep_max_iters must be a positive integer")
        if not self.sweep_tol > 0:
            raise ConfigurationError("sweep_tol must be positive")
        if not 0 < self.relaxation <= 1:
            raise ConfigurationError("relaxation must lie in (0, 1]")

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "horizon_steps": self.horizon_steps,
            "sweep_max_iters": self.sweep_max_iters,
            "sweep_tol": self.sweep_tol,
            "relaxation": self.relaxation,
        }


@dataclass
class OcpSolution:
    controls: np.ndarray
    states: Trajectory
    costates: np.ndarray
    converged: bool
    optimality_residual: float
    cost: float
    iterations: int


def running_cost(X, U, gamma):
    """``(1/M) sum_i (|x_i - xbar|^2 + gamma |u_i|^2)`` over the ``M`` rows of ``X``."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    if X.shape != U.shape:
        raise ContractError(f"state {X.shape} and control {U.shape} shapes differ")
    dev = X - X.mean(axis=0)
    return float((np.sum(dev * dev) + gamma * np.sum(U * U)) / X.shape[0])


def hamiltonian(X, U, P, kernel, gamma, weights=None, total=None):
    X = np.asarray(X, dtype=float)
    P = np.asarray(P, dtype=float)
    if P.shape != X.shape:
        raise ContractError(f"costate {P.shape} and state {X.shape} shapes differ")
    f = interaction_drift(X, kernel, weights, total) + U
    return running_cost(X, U, gamma) + float(np.sum(P * f))


def adjoint_operator(X, kernel, weights=None, total=None, coincidence_tol=COINCIDENCE_TOL):
    """Return ``P -> dp/dt`` for a frozen state ``X``.

    The costate equation is linear in ``P`` once ``X`` is fixed, so the
    distance and kernel matrices are computed once and reused for every
    costate the sweep evaluates at this state.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if total is None:
        total = n
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    Xc, dist = pairwise_distances(X)
    phi, dphi = kernel.matrix(dist, derivative=True)
    ratio = np.zeros_like(dist)
    np.divide(dphi, dist, out=ratio, where=dist >= coincidence_tol)
    phi_w = phi @ w
    consensus_term = (2.0 / n) * Xc

    def apply(P):
        # <q_lm, x_m - x_l> with q_lm = w_l p_m - w_m p_l, from G[l, m] = p_l . x_m
        G = P @ Xc.T
        g = np.diag(G)
        inner = w[:, None] * (g[None, :] - G.T) - w[None, :] * (G - g[:, None])
        A = ratio * inner
        grad = A @ Xc - A.sum(axis=1)[:, None] * Xc
        grad += w[:, None] * (phi @ P) - phi_w[:, None] * P
        grad /= total
        grad += consensus_term
        return -grad

    return apply


def adjoint_rhs(X, P, kernel, weights=None, total=None, coincidence_tol=COINCIDENCE_TOL):
    """Costate derivative ``dp/dt = -grad_x H``.

    For weights ``w`` the gradient of the interaction part at row ``l`` is
    ``(1/total) sum_m [phi'(r)/r <q_lm, x_m - x_l> (x_m - x_l) + phi(r) q_lm]``
    with ``q_lm = w_l p_m - w_m p_l``; unit weights give the familiar
    ``p_m - p_l`` form. The ``phi'/r`` factor is dropped for pairs closer than
    ``coincidence_tol``, where the ``x_m - x_l`` factor already makes the
    term vanish.
    """
    X = np.asarray(X, dtype=float)
    P = np.asarray(P, dtype=float)
    if P.shape != X.shape:
        raise ContractError(f"costate {P.shape} and state {X.shape} shapes differ")
    out = adjoint_operator(X, kernel, weights, total, coincidence_tol)(P)
    bad = ~np.all(np.isfinite(out), axis=1)
    if np.any(bad):
        agent = int(np.flatnonzero(bad)[0])
        raise NumericError(f"non-finite adjoint gradient at agent {agent}", agent=agent)
    return out


def control_from_costate(P, gamma, N):
    """Closed-form minimizer of the Hamiltonian in the control: ``-(N / 2 gamma) P``."""
    if not gamma > 0:
        raise ConfigurationError("gamma must be positive")
    return -(N / (2.0 * gamma)) * np.asarray(P, dtype=float)


def _trapezoid(values, h_t):
    values = np.asarray(values)
    return float(h_t * (values.sum() - 0.5 * (values[0] + values[-1])))


def _forward(X0, U, drift, h_t):
    H = U.shape[0] - 1
    states = np.empty_like(U)
    states[0] = X0
    for k in range(H):
        u0, u1 = U[k], U[k + 1]
        um = 0.5 * (u0 + u1)

        def f(t, X, k=k, u0=u0, um=um, u1=u1):
            s = t - k * h_t
            u = u0 if s < 0.25 * h_t else (u1 if s > 0.75 * h_t else um)
            return drift(X) + u

        states[k + 1] = rk4_step(f, states[k], k * h_t, h_t)
    return states


def _backward(states, operator, h_t):
    H = states.shape[0] - 1
    costates = np.zeros_like(states)
    # reversed time s = T - t; stage states come from linear interpolation of
    # the stored grid, so each interval needs operators at both ends and the
    # midpoint only
    op_hi = operator(states[H])
    for k in range(H, 0, -1):
        op_mid = operator(0.5 * (states[k] + states[k - 1]))
        op_lo = operator(states[k - 1])

        def g(s, Q, k=k, op_hi=op_hi, op_mid=op_mid, op_lo=op_lo):
            local = s - (H - k) * h_t
            op = op_hi if local < 0.25 * h_t else (op_lo if local > 0.75 * h_t else op_mid)
            return -op(Q)

        costates[k - 1] = rk4_step(g, costates[k], (H - k) * h_t, h_t)
        op_hi = op_lo
    return costates


def forward_backward_sweep(X0, kernel, cfg, h_t, weights=None, total=None, U0=None):
    """Solve the local optimal control problem on ``horizon_steps`` grid intervals.

    Relaxed fixed-point iteration: integrate the state forward under the
    current control, the costate backward from zero, form the closed-form
    control and blend it in with weight ``cfg.relaxation``. Stops when the
    max-norm gap between the current and the closed-form control drops to
    ``cfg.sweep_tol``; the returned controls and costates therefore satisfy
    the control law to that tolerance when ``converged`` is set.

    Raises :class:`SweepError` if cost and residual both grow for five
    consecutive iterations.
    """
    X0 = np.asarray(X0, dtype=float)
    M = X0.shape[0]
    H = cfg.horizon_steps
    gamma = cfg.gamma
    omega = cfg.relaxation

    def drift(X):
        return interaction_drift(X, kernel, weights, total)

    def operator(X):
        return adjoint_operator(X, kernel, weights, total)

    if U0 is None:
        U = np.zeros((H + 1,) + X0.shape)
    else:
        U = np.array(U0, dtype=float)
        if U.shape != (H + 1,) + X0.shape:
            raise ContractError(f"initial control guess has shape {U.shape}")

    prev_cost = None
    prev_residual = np.inf
    rises = 0
    residual = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, cfg.sweep_max_iters + 1):
        states = _forward(X0, U, drift, h_t)
        costates = _backward(states, operator, h_t)
        candidate = control_from_costate(costates, gamma, M)
        residual = float(np.max(np.abs(candidate - U)))
        cost = _trapezoid([running_cost(states[k], U[k], gamma) for k in range(H + 1)], h_t)
        if residual <= cfg.sweep_tol:
            converged = True
            break
        # a converging sweep may approach its fixed point with a slowly rising
        # cost, so only a rise in both cost and residual counts as divergence
        if prev_cost is not None and cost > prev_cost and residual > prev_residual:
            rises += 1
            if rises >= DIVERGENCE_PATIENCE:
                raise SweepError(
                    f"sweep diverging: cost rose {rises} times in a row (residual {residual:.3e})",
                    residual=residual,
                )
        else:
            rises = 0
        prev_cost = cost
        prev_residual = residual
        U = (1.0 - omega) * U + omega * candidate

    traj = Trajectory(h_t * np.arange(H + 1), states)
    return OcpSolution(U, traj, costates, converged, residual, cost, iterations)


def _shifted(U):
    out = np.empty_like(U)
    out[:-1] = U[1:]
    out[-1] = U[-1]
    return out


def receding_horizon(
    X0,
    kernel,
    cfg,
    h_t,
    consensus_tol,
    max_steps,
    t0=0.0,
    warm_start=True,
    diagnostics=None,
    store_states=False,
    report=None,
):
    """Fixed-horizon iterative control of the full agent model.

    At each outer step the local problem is solved from the current state,
    only its first control value is applied for one step of length ``h_t``,
    and the loop stops once the consensus parameter falls below
    ``consensus_tol`` or after ``max_steps`` steps.

    ``diagnostics`` is an optional callable ``X -> K`` evaluated outside the
    timed region (used to record cluster counts for the full strategy).
    """
    if not consensus_tol > 0:
        raise ConfigurationError("consensus_tol must be positive")
    X = np.array(X0, dtype=float)
    if report is None:
        report = RunReport(h_t=h_t, strategy="full", consensus_tol=consensus_tol)
    if store_states and report.states is None:
        report.states = []

    def drift(Y):
        return interaction_drift(Y, kernel)

    guess = None
    t = t0
    for m in range(max_steps + 1):
        chi = consensus_parameter(X)
        K = diagnostics(X) if diagnostics is not None else None
        if report.states is not None:
            report.states.append(X.copy())
        if chi < consensus_tol or m == max_steps:
            report.append(t, chi, K=K)
            break
        tic = time.perf_counter()
        try:
            sol = forward_backward_sweep(X, kernel, cfg, h_t, U0=guess)
        except SweepError as exc:
            exc.step = m
            raise
        toc = time.perf_counter()
        u = sol.controls[0]
        X_next = rk4_step(lambda s, Y: drift(Y) + u, X, t, h_t)
        tac = time.perf_counter()
        if warm_start:
            guess = _shifted(sol.controls)
        phases = {"ocp": 1e3 * (toc - tic), "advance": 1e3 * (tac - toc)}
        report.append(
            t,
            chi,
            K=K,
            cost=running_cost(X, u, cfg.gamma),
            wall_ms=1e3 * (tac - tic),
            phases=phases,
            iterations=sol.iterations,
        )
        X = X_next
        t = t0 + (m + 1) * h_t
    report.consensus_reached = report.final_consensus < consensus_tol
    return report
