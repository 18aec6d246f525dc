"""Experiment configuration, JSON round-trip and presets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..control import OcpConfig
from ..errors import ConfigurationError
from ..framework import FrameworkConfig
from ..model import InfluenceKernel

STRATEGIES = ("uncontrolled", "full", "cluster", "pod", "two_level")
INIT_KINDS = ("preclustered", "uniform")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one run or one benchmark sweep.

    ``max_outer_steps`` bounds the number of steps after warm-up, so an
    uncontrolled run covers at most ``max_outer_steps * h_t`` time units.
    ``dbscan["eps"]`` is ``"auto"`` for the Frobenius heuristic or a number.
    """

    name: str = "experiment"
    N: int = 10
    d: int = 2
    kernel: dict = field(default_factory=lambda: {"kind": "ghk", "alpha": 1.6})
    gamma: float = 0.1
    h_t: float = 0.05
    warmup_steps: int = 20
    horizon_steps: int = 10
    sweep_max_iters: int = 100
    sweep_tol: float = 1e-8
    relaxation: float = 0.5
    consensus_tol: float = 1e-6
    pod_tau: float = 1e-3
    pod_mode: str = "relative"
    dbscan: dict = field(default_factory=lambda: {"eps": "auto", "min_pts": 1, "eps_mode": "refresh"})
    snapshot_source: str = "agents"
    strategy: str = "full"
    seed: int = 0
    init: dict = field(
        default_factory=lambda: {"kind": "preclustered", "K0": 3, "spread": 0.1, "separation": 3.0}
    )
    max_outer_steps: int = 5000
    store_states: bool = False
    record_clusters: bool = True
    out_dir: str = "out"
    bench: dict = field(
        default_factory=lambda: {"d": [50], "N": [50, 100, 150], "strategies": ["full"], "repeats": 3}
    )

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("N", "d", "warmup_steps", "horizon_steps", "sweep_max_iters", "max_outer_steps"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
        if self.N < 1 or self.d < 1:
            raise ConfigurationError("N and d must be positive")
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigurationError("seed must be a nonnegative integer")
        if self.init.get("kind") not in INIT_KINDS:
            raise ConfigurationError(f"init.kind must be one of {INIT_KINDS}")
        eps = self.dbscan.get("eps", "auto")
        if eps != "auto" and not (isinstance(eps, (int, float)) and eps >= 0):
            raise ConfigurationError("dbscan.eps must be 'auto' or a nonnegative number")
        # building the typed configs runs their own checks
        self.kernel_obj()
        self.framework_config()

    def kernel_obj(self):
        try:
            return InfluenceKernel.from_dict(self.kernel)
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"bad kernel spec {self.kernel!r}: {exc}") from exc

    def ocp_config(self):
        return OcpConfig(
            gamma=self.gamma,
            horizon_steps=self.horizon_steps,
            sweep_max_iters=self.sweep_max_iters,
            sweep_tol=self.sweep_tol,
            relaxation=self.relaxation,
        )

    def framework_config(self, strategy=None):
        strategy = strategy or self.strategy
        eps = self.dbscan.get("eps", "auto")
        kwargs = dict(
            warmup_steps=self.warmup_steps,
            h_t=self.h_t,
            consensus_tol=self.consensus_tol,
            ocp=self.ocp_config(),
            pod_tau=self.pod_tau,
            pod_mode=self.pod_mode,
            eps=None if eps == "auto" else float(eps),
            eps_mode=self.dbscan.get("eps_mode", "refresh"),
            min_pts=self.dbscan.get("min_pts", 1),
            snapshot_source=self.snapshot_source,
            max_outer_steps=self.max_outer_steps,
        )
        if strategy == "cluster":
            kwargs.update(pod_mode="off", warmup_steps=0)
        elif strategy == "pod":
            kwargs.update(clustering=False)
        return FrameworkConfig(**kwargs)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        return cls.from_dict(data)

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        return cls.from_json(path.read_text())

    def override(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


def alpha_study(alpha, strategy="full"):
    """N=10 agents in the plane, three pre-clustered groups, horizon T=20."""
    return ExperimentConfig(
        name=f"alpha_{alpha:g}_{strategy}",
        N=10,
        d=2,
        kernel={"kind": "ghk", "alpha": float(alpha)},
        strategy=strategy,
        consensus_tol=1e-6,
        max_outer_steps=400 if strategy == "uncontrolled" else 5000,
    )


def scaling_study(N, d, strategy="full", seed=0):
    """alpha=1.6 pre-clustered runs used for the CPU-time tables."""
    return ExperimentConfig(
        name=f"scaling_d{d}_N{N}_{strategy}",
        N=N,
        d=d,
        kernel={"kind": "ghk", "alpha": 1.6},
        strategy=strategy,
        seed=seed,
        consensus_tol=1e-8,
        max_outer_steps=2000,
    )


def framework_study(N=150, d=150, consensus_tol=1e-19):
    """Two-level run with an uncontrolled interval [0, 1] before control starts."""
    return ExperimentConfig(
        name=f"framework_d{d}_N{N}",
        N=N,
        d=d,
        kernel={"kind": "ghk", "alpha": 1.6},
        strategy="two_level",
        warmup_steps=20,
        consensus_tol=consensus_tol,
        max_outer_steps=5000,
    )


PRESETS = {
    "alpha": alpha_study,
    "scaling": scaling_study,
    "framework": framework_study,
}
