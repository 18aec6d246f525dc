"""Seeded initial conditions."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigurationError, GenerationError

MAX_RETRIES = 1000


def generate_preclustered(N, d, K0, spread, separation, seed):
    """Agents grouped around ``K0`` well-separated, deliberately asymmetric means.

    Means are drawn from an anisotropic box ``[0, L * (1 + k/d)]`` along axis
    ``k`` (so neither the box nor the means are symmetric about any axis),
    rejecting candidates closer than ``separation`` to an accepted mean. The box
    side ``L`` is chosen so that typical distances between means are about
    twice ``separation``. Agents are assigned to means round-robin and
    perturbed by Gaussian noise whose RMS radius is ``spread``.
    """
    if not 1 <= K0 <= N:
        raise ConfigurationError(f"need 1 <= K0 <= N, got K0={K0}, N={N}")
    if spread < 0 or separation < 0:
        raise ConfigurationError("spread and separation must be nonnegative")
    rng = np.random.default_rng(seed)
    skew = 1.0 + np.arange(d) / d
    side = max(separation, 1e-12) * 2.0 / (math.sqrt(d / 6.0) * 1.5)
    means = []
    for _ in range(K0):
        for _attempt in range(MAX_RETRIES):
            cand = rng.uniform(0.0, 1.0, d) * side * skew
            if all(np.linalg.norm(cand - m) >= separation for m in means):
                means.append(cand)
                break
        else:
            raise GenerationError(
                f"could not place {K0} means with separation {separation} in {d} dimensions"
            )
    means = np.array(means)
    noise = rng.standard_normal((N, d)) * (spread / math.sqrt(d))
    return means[np.arange(N) % K0] + noise


def generate_uniform(N, d, low, high, seed):
    if not high > low:
        raise ConfigurationError("uniform box needs high > low")
    rng = np.random.default_rng(seed)
    return rng.uniform(low, high, (N, d))
