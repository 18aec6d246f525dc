"""Fixed-step RK4 integration, truncated SVD and finite-difference gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IntegrationError

__all__ = [
    "Trajectory",
    "SvdResult",
    "rk4_step",
    "integrate",
    "integrate_steps",
    "step_count",
    "truncated_svd",
    "finite_difference_gradient",
]


@dataclass
class Trajectory:
    """Sampled solution: ``states[k]`` is the state at ``times[k]``."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or len(self.times) != len(self.states):
            raise ValueError("times and states must align")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.states[-1]


@dataclass
class SvdResult:
    """Leading singular triplets of a matrix ``M ~ left @ diag(singular_values) @ right.T``."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def rank(self):
        return len(self.singular_values)


def rk4_step(f, X, t, h_t):
    """One classical fourth-order Runge-Kutta step of ``dX/dt = f(t, X)``."""
    if not h_t > 0:
        raise ConfigurationError(f"step size must be positive, got {h_t!r}")
    k1 = f(t, X)
    k2 = f(t + 0.5 * h_t, X + 0.5 * h_t * k1)
    k3 = f(t + 0.5 * h_t, X + 0.5 * h_t * k2)
    k4 = f(t + h_t, X + h_t * k3)
    out = X + (h_t / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError(f"non-finite state in RK4 step at t={t}", t=t)
    return out


def step_count(t0, t1, h_t):
    """Number of steps of size ``h_t`` covering ``[t0, t1]`` exactly.

    Raises :class:`ConfigurationError` when the interval is not an integer
    multiple of the step (a trailing partial step is never taken).
    """
    if not h_t > 0:
        raise ConfigurationError(f"step size must be positive, got {h_t!r}")
    if not t1 > t0:
        raise ConfigurationError(f"need t1 > t0, got [{t0}, {t1}]")
    ratio = (t1 - t0) / h_t
    n = round(ratio)
    # a few ulps of slack: (0.3 - 0.0) / 0.1 evaluates to 2.9999999999999996
    if n < 1 or abs(ratio - n) > 4 * math.ulp(max(ratio, 1.0)):
        raise ConfigurationError(f"interval length {t1 - t0} is not a multiple of h_t={h_t}")
    return int(n)


def integrate_steps(f, X0, t0, h_t, n_steps):
    """Take ``n_steps`` RK4 steps from ``(t0, X0)`` and return the full trajectory."""
    X = np.array(X0, dtype=float)
    states = np.empty((n_steps + 1,) + X.shape)
    states[0] = X
    for k in range(n_steps):
        X = rk4_step(f, X, t0 + k * h_t, h_t)
        states[k + 1] = X
    times = t0 + h_t * np.arange(n_steps + 1)
    return Trajectory(times, states)


def integrate(f, X0, t0, t1, h_t):
    """Integrate ``dX/dt = f(t, X)`` over ``[t0, t1]`` with fixed RK4 steps."""
    return integrate_steps(f, X0, t0, h_t, step_count(t0, t1, h_t))


def _fix_signs(U, V):
    # first non-negligible entry of each left vector is made positive
    for k in range(U.shape[1]):
        col = U[:, k]
        cutoff = 1e-12 * np.max(np.abs(col))
        idx = np.flatnonzero(np.abs(col) > cutoff)
        if idx.size and col[idx[0]] < 0:
            U[:, k] = -col
            V[:, k] = -V[:, k]
    return U, V


def truncated_svd(M, keep=None):
    """Truncated SVD with a caller-supplied rank rule.

    Parameters
    ----------
    M : array, shape (d, m)
    keep : None, int, or callable
        ``None`` keeps every numerically nonzero singular value, an int keeps
        at most that many, and a callable receives the nonzero singular values
        (descending) and returns the rank to keep.

    Returns
    -------
    SvdResult
        Rank zero when ``M`` is identically zero.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix with at least one column, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix must be finite")
    d, m = M.shape
    if not np.any(M):
        return SvdResult(np.zeros((d, 0)), np.zeros(0), np.zeros((m, 0)))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    positive = int(np.sum(s > max(d, m) * np.finfo(float).eps * s[0]))
    s = s[:positive]
    if keep is None:
        r = positive
    elif callable(keep):
        r = int(keep(s))
    else:
        r = int(keep)
    r = max(0, min(r, positive))
    U, V = _fix_signs(U[:, :r].copy(), Vt[:r].T.copy())
    return SvdResult(U, s[:r].copy(), V)


def finite_difference_gradient(g, X, step=1e-6):
    """Entrywise central-difference gradient of a scalar function of a matrix."""
    X = np.array(X, dtype=float)
    grad = np.empty_like(X)
    flat = X.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + step
        up = g(X)
        flat[k] = orig - step
        down = g(X)
        flat[k] = orig
        gflat[k] = (up - down) / (2.0 * step)
    return grad
