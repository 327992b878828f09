import numpy as np
import pytest

from stablemotion.chain import build_chain
from stablemotion.errors import IndexCollision, ZeroLengthChain
from stablemotion.gmm import GmmFitConfig, fit_gmm, order_components
from stablemotion.profile import (
    ProfileConfig,
    joint_progress,
    map_joint_indices,
    regenerate_profile,
)
from conftest import s_curve_demo


class TestJointProgress:
    def test_equally_spaced(self):
        lam = joint_progress(np.array([[0.0, 0], [1, 0], [2, 0]]))
        assert np.allclose(lam, [0, 0.5, 1])

    def test_unequal_spacing(self):
        lam = joint_progress(np.array([[0.0, 0], [1, 0], [4, 0]]))
        assert np.allclose(lam, [0, 0.25, 1])

    def test_coincident_joints_raise(self):
        with pytest.raises(ZeroLengthChain):
            joint_progress(np.array([[0.0, 0], [0, 0], [1, 0]]))


class TestMapJointIndices:
    def test_midpoint(self):
        assert map_joint_indices(np.array([0.0, 0.5, 1.0]), 11).tolist() == \
            [0, 5, 10]

    def test_quarter(self):
        assert map_joint_indices(np.array([0.0, 0.25, 1.0]), 5).tolist() == \
            [0, 1, 4]

    def test_collision(self):
        with pytest.raises(IndexCollision):
            map_joint_indices(np.array([0.0, 0.01, 1.0]), 5)


class TestRegenerateProfile:
    def test_collinear_uniform_speed(self):
        joints = np.array([[0.0, 0], [1, 0], [2, 0]])
        traj = regenerate_profile(joints, ProfileConfig(p=21, dt=0.1))
        gaps = np.linalg.norm(np.diff(traj.points, axis=0), axis=1)
        assert np.allclose(gaps, gaps[0], atol=1e-9)
        speeds = np.linalg.norm(traj.velocities[:-1], axis=1)
        assert np.allclose(speeds, speeds[0], atol=1e-8)
        assert np.allclose(traj.velocities[-1], 0)

    def test_right_angle_passes_through_corner(self):
        joints = np.array([[0.0, 0], [1, 0], [1, 1]])
        cfg = ProfileConfig(p=21, dt=0.05)
        traj = regenerate_profile(joints, cfg)
        idx = map_joint_indices(joint_progress(joints), 21)
        for q, j in enumerate(idx):
            assert np.linalg.norm(traj.points[j] - joints[q]) < 1e-9

    def test_pins_exact_without_interpolation(self):
        joints = np.array([[0.0, 0], [1, 0.5], [2.5, -0.5], [3, 1]])
        cfg = ProfileConfig(p=40, dt=0.05, interpolate_between_joints=False)
        traj = regenerate_profile(joints, cfg)
        idx = map_joint_indices(joint_progress(joints), 40)
        for q, j in enumerate(idx):
            assert np.linalg.norm(traj.points[j] - joints[q]) < 1e-9

    def test_identity_chain_arc_length_close_to_demo(self):
        demo = s_curve_demo()
        comps = fit_gmm(demo.points, GmmFitConfig(k_max=6, restarts=3, seed=3))
        chain = build_chain(order_components(comps, demo), demo)
        traj = regenerate_profile(chain.joints, ProfileConfig.for_demo(demo))
        assert len(traj) == len(demo)
        assert abs(traj.arc_length() - demo.arc_length()) < \
            0.05 * demo.arc_length()

    def test_translation_equivariance(self):
        joints = np.array([[0.0, 0], [1, 0.5], [2, -0.5], [3, 0.2]])
        t = np.array([4.0, -2.0])
        cfg = ProfileConfig(p=30, dt=0.1)
        a = regenerate_profile(joints, cfg)
        b = regenerate_profile(joints + t, cfg)
        assert np.max(np.abs(b.points - (a.points + t))) < 1e-9

    def test_speed_bounded_by_max_gap_over_dt(self):
        joints = np.array([[0.0, 0], [0.5, 1.5], [3, 0]])
        cfg = ProfileConfig(p=25, dt=0.2)
        traj = regenerate_profile(joints, cfg)
        max_gap = np.max(np.linalg.norm(np.diff(traj.points, axis=0), axis=1))
        speeds = np.linalg.norm(traj.velocities, axis=1)
        assert np.all(speeds <= max_gap / cfg.dt + 1e-12)
        assert np.allclose(traj.velocities[-1], 0)
