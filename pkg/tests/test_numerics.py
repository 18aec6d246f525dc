import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abmrc.errors import ConfigurationError, IntegrationError
from abmrc.numerics import (
    Trajectory,
    finite_difference_gradient,
    integrate,
    integrate_steps,
    rk4_step,
    step_count,
    truncated_svd,
)


def decay(t, x):
    return -x


class TestRk4:
    def test_zero_rhs(self, rng):
        X = rng.normal(size=(3, 2))
        np.testing.assert_array_equal(rk4_step(lambda t, Y: np.zeros_like(Y), X, 0.0, 0.1), X)

    def test_exponential(self):
        x = rk4_step(decay, np.array([1.0]), 0.0, 0.1)[0]
        assert abs(x - math.exp(-0.1)) < 1e-7
        assert x == pytest.approx(0.9048375, abs=5e-8)

    def test_order(self):
        errs = [abs(rk4_step(decay, np.array([1.0]), 0.0, h)[0] - math.exp(-h)) for h in (0.1, 0.05)]
        assert 28 <= errs[0] / errs[1] <= 36

    def test_linear_step_is_taylor_polynomial(self, rng):
        A = rng.normal(size=(2, 2))
        x0 = rng.normal(size=(2, 1))
        h = 0.3
        hA = h * A
        taylor = np.eye(2)
        term = np.eye(2)
        for k in range(1, 5):
            term = term @ hA / k
            taylor = taylor + term
        np.testing.assert_allclose(rk4_step(lambda t, X: A @ X, x0, 0.0, h), taylor @ x0, atol=1e-14)

    def test_time_dependent(self):
        # x' = t integrated exactly (cubic-exact scheme)
        traj = integrate(lambda t, x: np.full_like(x, t), np.zeros((1, 1)), 0.0, 2.0, 0.25)
        assert traj.final[0, 0] == pytest.approx(2.0, abs=1e-13)

    def test_non_finite(self):
        with pytest.raises(IntegrationError), np.errstate(divide="ignore"):
            rk4_step(lambda t, x: x / 0.0, np.array([1.0]), 0.0, 0.1)

    def test_time_reversal(self, rng):
        A = rng.normal(size=(3, 3))
        X0 = rng.normal(size=(3, 2))
        fwd = integrate(lambda t, X: A @ X, X0, 0.0, 1.0, 0.01)
        back = integrate(lambda t, X: -A @ X, fwd.final, 0.0, 1.0, 0.01)
        np.testing.assert_allclose(back.final, X0, atol=1e-8)

    def test_deterministic(self, rng):
        A = rng.normal(size=(3, 3))
        X0 = rng.normal(size=(3, 2))
        a = integrate(lambda t, X: np.tanh(A @ X), X0, 0.0, 1.0, 0.05)
        b = integrate(lambda t, X: np.tanh(A @ X), X0, 0.0, 1.0, 0.05)
        assert np.array_equal(a.states, b.states)


class TestGrid:
    def test_step_count(self):
        assert step_count(0.0, 1.0, 0.05) == 20
        assert step_count(0.0, 20.0, 0.05) == 400
        with pytest.raises(ConfigurationError):
            step_count(0.0, 1.0, 0.3)
        with pytest.raises(ConfigurationError):
            step_count(1.0, 1.0, 0.1)

    def test_trajectory_grid(self):
        traj = integrate_steps(decay, np.ones((2, 1)), 1.0, 0.5, 4)
        np.testing.assert_allclose(traj.times, [1.0, 1.5, 2.0, 2.5, 3.0])
        assert len(traj) == 5
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1, 1)))


class TestSvd:
    def test_rank_one_example(self):
        res = truncated_svd(np.array([[1.0, 2.0], [2.0, 4.0]]))
        assert res.rank == 1
        assert res.singular_values[0] == pytest.approx(5.0, rel=1e-14)
        np.testing.assert_allclose(res.left[:, 0], np.array([1, 2]) / math.sqrt(5), atol=1e-14)

    def test_diagonal(self):
        res = truncated_svd(np.diag([1.0, -3.0, 2.0]))
        np.testing.assert_allclose(res.singular_values, [3.0, 2.0, 1.0])

    def test_reconstruction(self, rng):
        M = rng.normal(size=(20, 50))
        res = truncated_svd(M)
        rec = res.left @ np.diag(res.singular_values) @ res.right.T
        assert np.linalg.norm(M - rec) <= 1e-10 * np.linalg.norm(M)

    def test_zero_matrix(self):
        assert truncated_svd(np.zeros((3, 4))).rank == 0

    def test_keep_int_and_callable(self, rng):
        M = rng.normal(size=(6, 9))
        assert truncated_svd(M, keep=2).rank == 2
        assert truncated_svd(M, keep=lambda s: 3).rank == 3
        assert truncated_svd(M, keep=100).rank == 6

    def test_sign_convention(self, rng):
        M = rng.normal(size=(5, 8))
        a = truncated_svd(M)
        b = truncated_svd(-M)
        for k in range(a.rank):
            col = a.left[:, k]
            assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0
        np.testing.assert_allclose(a.left, b.left, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 12), st.integers(0, 2**32 - 1))
    def test_orthonormal_and_eckart_young(self, d, m, r, seed):
        M = np.random.default_rng(seed).normal(size=(d, m))
        full = truncated_svd(M)
        res = truncated_svd(M, keep=r)
        k = res.rank
        np.testing.assert_allclose(res.left.T @ res.left, np.eye(k), atol=1e-10)
        np.testing.assert_allclose(res.right.T @ res.right, np.eye(k), atol=1e-10)
        assert np.all(np.diff(res.singular_values) <= 0)
        resid = np.linalg.norm(M - res.left @ res.left.T @ M)
        expected = math.sqrt(np.sum(full.singular_values[k:] ** 2))
        assert abs(resid - expected) <= 1e-8 * max(1.0, np.linalg.norm(M))


class TestFiniteDifference:
    def test_constant(self, rng):
        X = rng.normal(size=(3, 2))
        np.testing.assert_array_equal(finite_difference_gradient(lambda Y: 4.2, X), np.zeros_like(X))

    def test_quadratic(self, rng):
        X = rng.normal(size=(4, 3))
        grad = finite_difference_gradient(lambda Y: float(np.sum(Y * Y)), X)
        np.testing.assert_allclose(grad, 2 * X, atol=1e-8)
