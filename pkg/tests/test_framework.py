import numpy as np
import pytest

from abmrc import framework
from abmrc.clustering import ClusterPartition, singleton_partition
from abmrc.control import OcpConfig, receding_horizon
from abmrc.errors import ConfigurationError, ContractError
from abmrc.framework import (
    FrameworkConfig,
    broadcast_controls,
    run_two_level,
    two_level_step,
    warmup,
)
from abmrc.harness.initial import generate_preclustered
from abmrc.model import InfluenceKernel, consensus_parameter, interaction_drift
from abmrc.numerics import rk4_step


@pytest.fixture(scope="module")
def clustered10():
    return generate_preclustered(10, 2, 3, 0.1, 3.0, seed=0)


class TestBroadcast:
    def test_hand_example(self):
        part = ClusterPartition(np.array([0, 0, 1]))
        out = broadcast_controls(np.array([[1.0, 0.0], [0.0, 1.0]]), part)
        np.testing.assert_array_equal(out, [[1, 0], [1, 0], [0, 1]])

    def test_singletons_and_single_cluster(self, rng):
        U = rng.normal(size=(4, 2))
        np.testing.assert_array_equal(broadcast_controls(U, singleton_partition(4)), U)
        out = broadcast_controls(U[:1], ClusterPartition(np.zeros(5, dtype=np.intp)))
        assert np.all(out == U[0])

    def test_label_out_of_range(self):
        with pytest.raises(ContractError):
            broadcast_controls(np.zeros((1, 2)), ClusterPartition(np.array([0, 1])))


class TestWarmup:
    def test_samples(self, ghk16, clustered10):
        cfg = FrameworkConfig(warmup_steps=1)
        assert len(warmup(clustered10, ghk16, cfg)) == 2
        const = np.tile([1.0, 2.0], (3, 1))
        traj = warmup(const, ghk16, FrameworkConfig(warmup_steps=4))
        assert np.all(traj.states == const)

    def test_contracts_with_global_kernel(self, clustered10):
        traj = warmup(clustered10, InfluenceKernel.ghk(0.1), FrameworkConfig())
        assert consensus_parameter(traj.final) < consensus_parameter(clustered10)


class TestStep:
    def test_consensus_input(self, ghk16):
        X = np.tile([0.3, -0.2, 1.0], (6, 1))
        window = [X.copy() for _ in range(3)]
        cfg = FrameworkConfig(warmup_steps=2)
        X_next, diag = two_level_step(X, 0.0, ghk16, cfg, window)
        assert np.max(np.abs(X_next - X)) <= 1e-14
        assert diag.K == 1

    def test_controlled_beats_uncontrolled(self, ghk16):
        X0 = generate_preclustered(20, 10, 3, 0.1, 3.0, seed=1)
        cfg = FrameworkConfig(warmup_steps=5)
        traj = warmup(X0, ghk16, cfg)
        X = traj.final
        X_ctrl, diag = two_level_step(X, traj.times[-1], ghk16, cfg, list(traj.states))
        X_free = rk4_step(lambda t, Y: interaction_drift(Y, ghk16), X, 0.0, cfg.h_t)
        assert diag.fallback is None
        assert consensus_parameter(X_ctrl) < consensus_parameter(X_free)

    def test_phase_timing_sums(self, ghk16, clustered10):
        cfg = FrameworkConfig(warmup_steps=3, max_outer_steps=15, consensus_tol=1e-12)
        rep = run_two_level(clustered10, ghk16, cfg)
        for wall, phases in zip(rep.wall_ms, rep.step_phase_ms):
            if wall is None:
                continue
            assert abs(sum(phases.values()) - wall) <= 0.05 * wall

    def test_window_discipline(self, ghk16, clustered10, monkeypatch):
        seen = []
        original = framework.two_level_step

        def spy(X, t, kernel, cfg, window, **kw):
            seen.append((len(window), np.array_equal(window[-1], X)))
            return original(X, t, kernel, cfg, window, **kw)

        monkeypatch.setattr(framework, "two_level_step", spy)
        cfg = FrameworkConfig(warmup_steps=4, max_outer_steps=6, consensus_tol=1e-12)
        run_two_level(clustered10, ghk16, cfg)
        assert seen and all(n == 5 and last for n, last in seen)

    def test_svd_fallback_skips_control(self, ghk16):
        # a window of zero states has no snapshot spread
        X = np.zeros((4, 2))
        X[0, 0] = 1.0
        window = [np.zeros((4, 2))] * 3
        cfg = FrameworkConfig(warmup_steps=2, clustering=False)
        X_next, diag = two_level_step(X, 0.0, ghk16, cfg, window)
        assert diag.fallback["phase"] == "svd" and not diag.fallback["reused_basis"]
        expected = rk4_step(lambda t, Y: interaction_drift(Y, ghk16), X, 0.0, cfg.h_t)
        np.testing.assert_array_equal(X_next, expected)


class TestDriver:
    def test_consensus_start(self, ghk16):
        X = np.tile([1.0, 1.0], (5, 1))
        rep = run_two_level(X, ghk16, FrameworkConfig(warmup_steps=3))
        assert rep.consensus_reached
        assert rep.steps == 3

    def test_cost_accounting(self, ghk16, clustered10):
        cfg = FrameworkConfig(warmup_steps=5, max_outer_steps=20, consensus_tol=1e-12)
        rep = run_two_level(clustered10, ghk16, cfg)
        costs = [c for c in rep.running_cost if c is not None]
        assert rep.total_cost == pytest.approx(cfg.h_t * sum(costs), rel=1e-12)
        assert rep.meta["control_start"] == pytest.approx(5 * cfg.h_t)
        # warm-up rows carry no cluster count or rank
        assert rep.cluster_counts[:5] == [None] * 5 and rep.cluster_counts[5] is not None

    def test_exhaustion(self, ghk16, clustered10):
        rep = run_two_level(clustered10, ghk16, FrameworkConfig(warmup_steps=2, max_outer_steps=3))
        assert not rep.consensus_reached and rep.steps == 5

    @pytest.mark.parametrize("warm", [False, True])
    def test_degenerate_matches_full(self, ghk16, warm):
        X0 = np.random.default_rng(3).normal(size=(10, 5))
        ocp = OcpConfig()
        cfg = FrameworkConfig(warmup_steps=0, pod_mode="off", eps=0.0, max_outer_steps=10,
                              consensus_tol=1e-30, ocp=ocp)
        reduced = run_two_level(X0, ghk16, cfg)
        full = receding_horizon(X0, ghk16, ocp, cfg.h_t, 1e-30, 10, warm_start=warm)
        assert len(reduced.consensus) == len(full.consensus) == 11
        assert max(reduced.cluster_counts[:-1]) == 10
        assert np.max(np.abs(np.array(reduced.consensus) - np.array(full.consensus))) <= 1e-8

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            FrameworkConfig(warmup_steps=0)
        with pytest.raises(ConfigurationError):
            FrameworkConfig(pod_mode="sometimes")
        with pytest.raises(ConfigurationError):
            FrameworkConfig(eps=-1.0)
        FrameworkConfig(warmup_steps=0, pod_mode="off")
