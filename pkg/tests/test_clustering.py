import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abmrc.clustering import (
    ClusterEnsemble,
    ClusterPartition,
    cluster_centers,
    dbscan,
    epsilon_heuristic,
    rhs_clustered,
    singleton_partition,
)
from abmrc.errors import ContractError, DomainError
from abmrc.model import InfluenceKernel, mean_state, rhs_uncontrolled
from abmrc.numerics import integrate


def union_find_components(X, eps):
    """Connected components of the inclusive eps-graph, labelled by smallest member."""
    n = len(X)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.sqrt(np.sum((X[i] - X[j]) ** 2)) <= eps:
                a, b = find(i), find(j)
                parent[max(a, b)] = min(a, b)
    roots = [find(i) for i in range(n)]
    ids = {}
    return np.array([ids.setdefault(r, len(ids)) for r in roots])


def same_partition(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.array_equal(a[:, None] == a[None, :], b[:, None] == b[None, :])


class TestEpsilon:
    def test_examples(self):
        assert epsilon_heuristic(np.array([[3.0, 4.0], [0.0, 0.0]])) == 2.5
        assert epsilon_heuristic(np.zeros((1, 3))) == 0.0

    def test_homogeneous(self, rng):
        X = rng.normal(size=(7, 3))
        assert epsilon_heuristic(3.5 * X) == pytest.approx(3.5 * epsilon_heuristic(X), rel=1e-14)


class TestDbscan:
    def test_two_groups(self, rng):
        X = np.vstack([rng.normal(0, 0.1 / np.sqrt(2), (5, 2)), rng.normal(0, 0.1 / np.sqrt(2), (5, 2)) + [10, 0]])
        part = dbscan(X, 1.0)
        assert part.K == 2
        np.testing.assert_array_equal(part.labels, [0] * 5 + [1] * 5)

    def test_trivial(self):
        assert dbscan(np.ones((4, 2)), 0.0).K == 1
        assert dbscan(np.zeros((1, 3)), 0.5).K == 1

    def test_inclusive_boundary(self):
        X = np.array([[0.0], [1.0], [2.5]])
        np.testing.assert_array_equal(dbscan(X, 1.0).labels, [0, 0, 1])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 30), st.integers(1, 3), st.floats(0.0, 1.5), st.integers(0, 2**32 - 1))
    def test_matches_union_find(self, n, d, eps, seed):
        X = np.random.default_rng(seed).uniform(0, 3, (n, d))
        part = dbscan(X, eps, 1)
        np.testing.assert_array_equal(part.labels, union_find_components(X, eps))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 25), st.integers(0, 2**32 - 1))
    def test_permutation(self, n, seed):
        rng = np.random.default_rng(seed)
        X = rng.uniform(0, 3, (n, 2))
        perm = rng.permutation(n)
        a = dbscan(X, 0.6).labels
        b = dbscan(X[perm], 0.6).labels
        # agent perm[k] sits in row k of the permuted input
        assert same_partition(a[perm], b)

    def test_label_order_and_repeatability(self, rng):
        X = rng.uniform(0, 5, (20, 2))
        a = dbscan(X, 0.7)
        b = dbscan(X, 0.7)
        np.testing.assert_array_equal(a.labels, b.labels)
        firsts = [np.flatnonzero(a.labels == k)[0] for k in range(a.K)]
        assert firsts == sorted(firsts)

    def test_min_pts_noise_becomes_singletons(self):
        X = np.array([[0.0], [0.1], [0.2], [5.0]])
        part = dbscan(X, 0.15, min_pts=3)
        assert part.K == 2
        np.testing.assert_array_equal(part.labels, [0, 0, 0, 1])

    def test_errors(self):
        with pytest.raises(DomainError):
            dbscan(np.zeros((2, 1)), -1.0)
        with pytest.raises(DomainError):
            dbscan(np.zeros((2, 1)), 1.0, min_pts=0)


class TestCenters:
    def test_singletons(self, rng):
        X = rng.normal(size=(5, 3))
        C = cluster_centers(X, singleton_partition(5))
        np.testing.assert_array_equal(C.centers, X)
        np.testing.assert_array_equal(C.weights, np.ones(5))

    def test_hand_mean(self):
        C = cluster_centers(np.array([[0.0, 0.0], [2.0, 0.0]]), ClusterPartition(np.array([0, 0])))
        np.testing.assert_array_equal(C.centers, [[1.0, 0.0]])

    def test_weighted_global_mean(self, rng):
        X = rng.normal(size=(12, 3))
        part = ClusterPartition.from_labels(rng.integers(0, 4, 12))
        C = cluster_centers(X, part)
        np.testing.assert_allclose((C.weights[:, None] * C.centers).sum(axis=0) / 12, mean_state(X), atol=1e-14)

    def test_partition_size_mismatch(self):
        with pytest.raises(ContractError):
            cluster_centers(np.zeros((3, 2)), singleton_partition(4))

    def test_from_labels_renumbers(self):
        np.testing.assert_array_equal(ClusterPartition.from_labels([7, 3, 7, 1]).labels, [0, 1, 0, 2])


class TestCenterDynamics:
    def test_single_cluster(self, ghk16):
        C = ClusterEnsemble(np.array([[1.0, 2.0]]), np.array([6]), 6)
        np.testing.assert_array_equal(rhs_clustered(C, ghk16), np.zeros((1, 2)))

    def test_weighted_mean_conservation(self, rng, ghk16):
        C = ClusterEnsemble(rng.normal(size=(4, 3)), np.array([1, 5, 2, 3]), 11)
        out = rhs_clustered(C, ghk16)
        assert np.max(np.abs((C.weights[:, None] * out).sum(axis=0))) <= 1e-12

    def test_equal_weights_reduce_to_agent_model(self, rng, ghk16):
        Z = rng.normal(size=(4, 2))
        C = ClusterEnsemble(Z, np.full(4, 3), 12)
        np.testing.assert_allclose(rhs_clustered(C, ghk16), rhs_uncontrolled(Z, ghk16), atol=1e-14)

    def test_constant_kernel_exact(self, rng, const1):
        X0 = rng.normal(size=(30, 2)) + np.repeat([[0, 0], [3, 0], [0, 3]], 10, axis=0)
        part = ClusterPartition(np.repeat(np.arange(3), 10))
        full = integrate(lambda t, X: rhs_uncontrolled(X, const1), X0, 0.0, 1.0, 0.01)
        C0 = cluster_centers(X0, part)

        def f(t, Z):
            return rhs_clustered(ClusterEnsemble(Z, C0.weights, 30), const1)

        reduced = integrate(f, C0.centers, 0.0, 1.0, 0.01)
        for k in range(len(full)):
            np.testing.assert_allclose(reduced.states[k], cluster_centers(full.states[k], part).centers, atol=1e-8)
