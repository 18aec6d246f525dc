"""Run reports shared by every control strategy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["RunReport", "SERIES_COLUMNS"]

SERIES_COLUMNS = ("step", "time", "X", "K", "r", "running_cost", "cumulative_cost", "wall_ms")

PHASES = ("warmup", "cluster", "svd", "ocp", "advance")


@dataclass
class RunReport:
    """Time series produced by a simulation or control run.

    Row ``k`` describes the state at ``times[k]`` and the step taken from it.
    ``cluster_counts``, ``ranks`` and ``running_cost`` hold ``None`` where the
    quantity does not apply (the final row has no outgoing step).
    """

    h_t: float
    strategy: str = ""
    consensus_tol: float = 0.0
    times: list = field(default_factory=list)
    consensus: list = field(default_factory=list)
    cluster_counts: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    running_cost: list = field(default_factory=list)
    cumulative_cost: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    phase_ms: dict = field(default_factory=lambda: {p: 0.0 for p in PHASES})
    step_phase_ms: list = field(default_factory=list)
    sweep_iterations: list = field(default_factory=list)
    fallbacks: list = field(default_factory=list)
    consensus_reached: bool = False
    states: list | None = None
    meta: dict = field(default_factory=dict)

    def append(self, t, X, K=None, r=None, cost=None, wall_ms=None, phases=None, iterations=None):
        total = self.cumulative_cost[-1] if self.cumulative_cost else 0.0
        if cost is not None:
            total = total + self.h_t * cost
        self.times.append(float(t))
        self.consensus.append(float(X))
        self.cluster_counts.append(None if K is None else int(K))
        self.ranks.append(None if r is None else int(r))
        self.running_cost.append(None if cost is None else float(cost))
        self.cumulative_cost.append(float(total))
        self.wall_ms.append(None if wall_ms is None else float(wall_ms))
        self.step_phase_ms.append(dict(phases or {}))
        self.sweep_iterations.append(iterations)
        for name, ms in (phases or {}).items():
            self.phase_ms[name] = self.phase_ms.get(name, 0.0) + ms

    def __len__(self):
        return len(self.times)

    @property
    def final_time(self):
        return self.times[-1] if self.times else math.nan

    @property
    def final_consensus(self):
        return self.consensus[-1] if self.consensus else math.nan

    @property
    def total_cost(self):
        return self.cumulative_cost[-1] if self.cumulative_cost else 0.0

    @property
    def total_wall_ms(self):
        return float(sum(w for w in self.wall_ms if w is not None))

    @property
    def steps(self):
        return len(self.times) - 1

    def last_defined(self, series):
        values = [v for v in getattr(self, series) if v is not None]
        return values[-1] if values else None

    def rows(self):
        for k in range(len(self.times)):
            yield {
                "step": k,
                "time": self.times[k],
                "X": self.consensus[k],
                "K": self.cluster_counts[k],
                "r": self.ranks[k],
                "running_cost": self.running_cost[k],
                "cumulative_cost": self.cumulative_cost[k],
                "wall_ms": self.wall_ms[k],
            }

    def summary(self):
        return {
            "strategy": self.strategy,
            "consensus_reached": bool(self.consensus_reached),
            "consensus_tol": self.consensus_tol,
            "final_time": self.final_time,
            "final_X": self.final_consensus,
            "steps": self.steps,
            "total_cost": self.total_cost,
            "wall_ms": self.total_wall_ms,
            "phase_ms": dict(self.phase_ms),
            "final_K": self.last_defined("cluster_counts"),
            "final_r": self.last_defined("ranks"),
            "fallbacks": list(self.fallbacks),
            "h_t": self.h_t,
            **self.meta,
        }

    def stacked_states(self):
        return None if self.states is None else np.stack(self.states)
