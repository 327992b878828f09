"""Regenerate a timed trajectory through re-positioned chain joints.

A straight line between the chain endpoints is bent through the joints by
the same Laplacian edit used on the chain itself; uniform timestamps and
finite differences then give the velocity targets for policy
re-estimation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Trajectory, compute_velocities
from .chain import build_laplacian, _solve_pinned
from .errors import IndexCollision, ZeroLengthChain


@dataclass(frozen=True)
class ProfileConfig:
    p: int                # number of points
    dt: float             # uniform sampling interval, seconds
    interpolate_between_joints: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.p < 2:
            raise ValueError("need at least 2 profile points")

    @staticmethod
    def for_demo(demo: Trajectory,
                 interpolate_between_joints: bool = True) -> "ProfileConfig":
        """Match the source demo's length and median sampling interval."""
        return ProfileConfig(p=len(demo), dt=demo.median_dt(),
                             interpolate_between_joints=interpolate_between_joints)


def joint_progress(joints: np.ndarray) -> np.ndarray:
    """Normalized cumulative piecewise distance along the joint polyline."""
    joints = np.asarray(joints, dtype=float)
    seg = np.linalg.norm(np.diff(joints, axis=0), axis=1)
    if np.any(seg <= 0):
        raise ZeroLengthChain("consecutive joints coincide")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    return cum / cum[-1]


def map_joint_indices(lam: np.ndarray, p: int) -> np.ndarray:
    """Index of each joint on a p-point profile: floor(lambda * (p-1))."""
    if p < 2:
        raise ValueError("need p >= 2")
    idx = np.floor(np.asarray(lam) * (p - 1)).astype(int)
    if len(np.unique(idx)) != len(idx):
        raise IndexCollision(
            f"{len(idx)} joints collide on a {p}-point profile")
    return idx


def regenerate_profile(joints: np.ndarray, cfg: ProfileConfig) -> Trajectory:
    """Timed trajectory through the joints with derived velocities."""
    joints = np.asarray(joints, dtype=float)
    p = cfg.p
    if p < joints.shape[0]:
        raise ValueError("profile must have at least as many points as joints")
    lam = joint_progress(joints)
    idx = map_joint_indices(lam, p)

    t = np.linspace(0.0, 1.0, p)[:, None]
    line = joints[0] * (1.0 - t) + joints[-1] * t

    sys = build_laplacian(p)
    delta = sys.L @ line
    pins = {int(j): joints[q] for q, j in enumerate(idx)}
    if cfg.interpolate_between_joints:
        for q in range(len(idx) - 1):
            j0, j1 = int(idx[q]), int(idx[q + 1])
            for j in range(j0 + 1, j1):
                frac = (j - j0) / (j1 - j0)
                pins[j] = joints[q] * (1.0 - frac) + joints[q + 1] * frac
    points = _solve_pinned(sys.L, delta, pins)
    timestamps = cfg.dt * np.arange(p)
    return compute_velocities(Trajectory(points, timestamps))
