import numpy as np
import pytest
from scipy.stats import multivariate_normal

from stablemotion.core import GaussianComponent, Trajectory
from stablemotion.errors import InsufficientData
from stablemotion.gmm import (
    GmmFitConfig,
    fit_gmm,
    order_components,
    responsibilities,
    responsibilities_batch,
)
from conftest import s_curve_demo


def _two_cluster_data(seed=7, n=400, sigma=0.3):
    rng = np.random.default_rng(seed)
    a = rng.normal([0.0, 0.0], sigma, size=(n // 2, 2))
    b = rng.normal([10.0, 0.0], sigma, size=(n // 2, 2))
    return np.vstack([a, b])


def brute_force_responsibilities(components, xi):
    """Direct posterior via scipy densities (independent of the log-space
    implementation path)."""
    num = np.array([
        c.prior * multivariate_normal.pdf(xi, mean=c.mean, cov=c.covariance)
        for c in components])
    return num / num.sum()


class TestFitGmm:
    def test_two_separated_clusters_bic_selects_two(self):
        data = _two_cluster_data()
        comps = fit_gmm(data, GmmFitConfig(k_max=4, restarts=3, seed=1))
        assert len(comps) == 2
        means = sorted([c.mean for c in comps], key=lambda m: m[0])
        assert np.linalg.norm(means[0] - [0, 0]) < 0.1
        assert np.linalg.norm(means[1] - [10, 0]) < 0.1

    def test_identical_points_clamped_covariance(self):
        data = np.tile([1.0, 2.0], (50, 1))
        cfg = GmmFitConfig(k_max=2, restarts=2, covariance_floor=1e-6, seed=0)
        comps = fit_gmm(data, cfg)
        assert len(comps) == 1
        assert np.allclose(comps[0].covariance, 1e-6 * np.eye(2))

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            fit_gmm(np.zeros((3, 3)), GmmFitConfig(k_max=4))

    def test_deterministic_given_seed(self):
        data = _two_cluster_data()
        cfg = GmmFitConfig(k_max=3, restarts=3, seed=42)
        a = fit_gmm(data, cfg)
        b = fit_gmm(data, cfg)
        for ca, cb in zip(a, b):
            assert np.array_equal(ca.mean, cb.mean)
            assert np.array_equal(ca.covariance, cb.covariance)

    def test_translation_equivariance(self):
        data = _two_cluster_data()
        shift = np.array([3.7, -1.2])
        cfg = GmmFitConfig(k_max=3, restarts=3, seed=5,
                           covariance_floor=1e-8)
        a = sorted(fit_gmm(data, cfg), key=lambda c: c.mean[0])
        b = sorted(fit_gmm(data + shift, cfg), key=lambda c: c.mean[0])
        for ca, cb in zip(a, b):
            assert np.allclose(cb.mean, ca.mean + shift, atol=1e-6)
            assert np.allclose(cb.covariance, ca.covariance, atol=1e-6)

    def test_covariance_floor_enforced(self):
        # collinear data would otherwise be rank-deficient
        t = np.linspace(0, 1, 80)
        data = np.column_stack([t, 2.0 * t])
        comps = fit_gmm(data, GmmFitConfig(k_max=2, restarts=2,
                                           covariance_floor=1e-4, seed=0))
        for c in comps:
            assert np.linalg.eigvalsh(c.covariance)[0] >= 1e-4 * (1 - 1e-9)


class TestResponsibilities:
    def _pair(self, gap=2.0):
        return [GaussianComponent(0.5, np.array([0.0, 0.0]), np.eye(2)),
                GaussianComponent(0.5, np.array([gap, 0.0]), np.eye(2))]

    def test_symmetry_midpoint(self):
        g = responsibilities(self._pair(), np.array([1.0, 5.0]))
        assert np.allclose(g, [0.5, 0.5], atol=1e-12)

    def test_far_separated_saturates(self):
        g = responsibilities(self._pair(gap=50.0), np.array([0.0, 0.0]))
        assert g[0] > 1 - 1e-12

    def test_single_component(self):
        comp = [GaussianComponent(1.0, np.zeros(2), np.eye(2))]
        assert responsibilities(comp, np.array([123.0, -9.0])) == \
            pytest.approx([1.0])

    def test_sum_to_one_random_sweep(self, rng):
        comps = [GaussianComponent(p, m, np.eye(2) * s) for p, m, s in
                 [(0.2, np.array([0.0, 0]), 0.5),
                  (0.5, np.array([4.0, 1]), 1.5),
                  (0.3, np.array([-3.0, 2]), 0.8)]]
        pts = rng.uniform(-50, 50, size=(100_000, 2))
        g = responsibilities_batch(comps, pts)
        assert np.max(np.abs(g.sum(axis=1) - 1.0)) < 1e-12
        assert g.min() >= 0.0

    def test_matches_brute_force(self, rng):
        comps = [GaussianComponent(0.3, rng.normal(size=2),
                                   np.eye(2) + 0.2 * np.ones((2, 2))),
                 GaussianComponent(0.7, rng.normal(size=2), 2.0 * np.eye(2))]
        for _ in range(50):
            x = rng.uniform(-5, 5, size=2)
            assert np.allclose(responsibilities(comps, x),
                               brute_force_responsibilities(comps, x),
                               atol=1e-12)


class TestOrderComponents:
    def test_orders_along_demo(self, s_curve):
        comps = fit_gmm(s_curve.points, GmmFitConfig(k_max=5, restarts=3,
                                                     seed=3))
        ordered = order_components(comps, s_curve)
        xs = [c.mean[0] for c in ordered.components]
        assert xs == sorted(xs)
        assert np.all(np.diff(ordered.order_scores) >= 0)

    def test_reversed_demo_reverses_order(self, s_curve):
        comps = fit_gmm(s_curve.points, GmmFitConfig(k_max=5, restarts=3,
                                                     seed=3))
        fwd = order_components(comps, s_curve)
        rev_demo = Trajectory(s_curve.points[::-1].copy(),
                              s_curve.timestamps.copy())
        rev = order_components(comps, rev_demo)
        fwd_means = [tuple(c.mean) for c in fwd.components]
        rev_means = [tuple(c.mean) for c in rev.components]
        assert fwd_means == rev_means[::-1]

    def test_single_component_score_near_half(self):
        demo = s_curve_demo(n=100)
        sym = [GaussianComponent(1.0, demo.points.mean(axis=0),
                                 np.cov(demo.points.T))]
        ordered = order_components(sym, demo)
        # weighted arc-length mean computed directly
        seg = np.linalg.norm(np.diff(demo.points, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        s /= s[-1]
        assert ordered.order_scores[0] == pytest.approx(s.mean(), abs=1e-9)
