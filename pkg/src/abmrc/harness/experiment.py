"""Strategy dispatch for a single configured run."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..clustering import dbscan, epsilon_heuristic
from ..control import receding_horizon, running_cost
from ..errors import AbmrcError, ConfigurationError
from ..framework import run_two_level
from ..model import consensus_parameter, interaction_drift
from ..numerics import rk4_step
from ..report import RunReport
from .config import ExperimentConfig
from .initial import generate_preclustered, generate_uniform
from .io import write_json, write_series

EXIT_CONSENSUS = 0
EXIT_CONFIG = 1
EXIT_MAX_STEPS = 2
EXIT_FAILURE = 3


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: RunReport | None
    error: str | None = None
    series_path: Path | None = None
    summary_path: Path | None = None

    @property
    def exit_code(self):
        if self.report is None:
            return EXIT_FAILURE
        return EXIT_CONSENSUS if self.report.consensus_reached else EXIT_MAX_STEPS


def initial_state(cfg):
    init = dict(cfg.init)
    kind = init.pop("kind")
    if kind == "preclustered":
        return generate_preclustered(
            cfg.N, cfg.d, init.get("K0", 3), init.get("spread", 0.1), init.get("separation", 3.0), cfg.seed
        )
    if kind == "uniform":
        return generate_uniform(cfg.N, cfg.d, init.get("low", 0.0), init.get("high", 1.0), cfg.seed)
    raise ConfigurationError(f"unknown init kind {kind!r}")


def cluster_counter(cfg):
    """Untimed ``X -> K`` diagnostic using the configured DBSCAN settings."""
    eps = cfg.dbscan.get("eps", "auto")
    min_pts = cfg.dbscan.get("min_pts", 1)
    frozen = None
    if eps == "auto" and cfg.dbscan.get("eps_mode", "refresh") == "frozen":
        frozen = epsilon_heuristic(initial_state(cfg))

    def count(X):
        if eps != "auto":
            radius = float(eps)
        else:
            radius = frozen if frozen is not None else epsilon_heuristic(X)
        return dbscan(X, radius, min_pts).K

    return count


def simulate_uncontrolled(X0, kernel, h_t, consensus_tol, max_steps, diagnostics=None, gamma=0.1,
                          store_states=False):
    """Plain RK4 integration, stopping at consensus or after ``max_steps`` steps."""
    X = np.array(X0, dtype=float)
    report = RunReport(h_t=h_t, strategy="uncontrolled", consensus_tol=consensus_tol)
    if store_states:
        report.states = []
    zero = np.zeros_like(X)
    for m in range(max_steps + 1):
        chi = consensus_parameter(X)
        K = diagnostics(X) if diagnostics is not None else None
        if report.states is not None:
            report.states.append(X.copy())
        t = m * h_t
        if chi < consensus_tol or m == max_steps:
            report.append(t, chi, K=K)
            break
        tic = time.perf_counter()
        X_next = rk4_step(lambda s, Y: interaction_drift(Y, kernel), X, t, h_t)
        ms = 1e3 * (time.perf_counter() - tic)
        report.append(t, chi, K=K, cost=running_cost(X, zero, gamma), wall_ms=ms, phases={"advance": ms})
        X = X_next
    report.consensus_reached = report.final_consensus < consensus_tol
    return report


def run_strategy(cfg, X0=None):
    """Run the configured strategy and return its :class:`RunReport` (no files written)."""
    kernel = cfg.kernel_obj()
    X0 = initial_state(cfg) if X0 is None else np.asarray(X0, dtype=float)
    diagnostics = cluster_counter(cfg) if cfg.record_clusters else None
    if cfg.strategy == "uncontrolled":
        return simulate_uncontrolled(
            X0, kernel, cfg.h_t, cfg.consensus_tol, cfg.max_outer_steps, diagnostics,
            gamma=cfg.gamma, store_states=cfg.store_states,
        )
    if cfg.strategy == "full":
        return receding_horizon(
            X0, kernel, cfg.ocp_config(), cfg.h_t, cfg.consensus_tol, cfg.max_outer_steps,
            diagnostics=diagnostics, store_states=cfg.store_states,
        )
    return run_two_level(
        X0, kernel, cfg.framework_config(), store_states=cfg.store_states, strategy=cfg.strategy
    )


def run_experiment(cfg, out_dir=None, write=True):
    """Run one configuration and write ``<name>.series.csv`` and ``<name>.summary.json``.

    Library failures during the run are caught and recorded in the summary
    instead of propagating; the result then carries a nonzero exit code.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    report, error = None, None
    try:
        report = run_strategy(cfg)
    except AbmrcError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        error = f"{type(exc).__name__}: {exc}"
    result = ExperimentResult(cfg, report, error)
    if not write:
        return result
    out.mkdir(parents=True, exist_ok=True)
    summary = {"name": cfg.name, "config": cfg.to_dict(), "exit_code": result.exit_code}
    if report is not None:
        summary["result"] = report.summary()
        result.series_path = write_series(report, out / f"{cfg.name}.series.csv")
        if report.states is not None:
            np.save(out / f"{cfg.name}.states.npy", report.stacked_states())
    else:
        summary["error"] = error
    result.summary_path = write_json(summary, out / f"{cfg.name}.summary.json")
    return result
