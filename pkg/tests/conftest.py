import numpy as np
import pytest

from stablemotion.core import Trajectory, compute_velocities


def s_curve_demo(n: int = 200, duration: float = 4.0,
                 scale: float = 1.0) -> Trajectory:
    """Gentle planar S-shaped demo from (0,0) to (2*scale, 0)."""
    t = np.linspace(0.0, 1.0, n)
    pts = np.column_stack([2.0 * t, 0.4 * np.sin(2.0 * np.pi * t)]) * scale
    return compute_velocities(Trajectory(pts, duration * t))


def arc_demo(n: int = 200, duration: float = 4.0) -> Trajectory:
    """Quarter-circle demo used as a second corpus shape."""
    t = np.linspace(0.0, 1.0, n)
    ang = 0.5 * np.pi * t
    pts = np.column_stack([np.sin(ang), 1.0 - np.cos(ang)])
    return compute_velocities(Trajectory(pts, duration * t))


def line_demo(n: int = 100, duration: float = 2.0) -> Trajectory:
    t = np.linspace(0.0, 1.0, n)
    pts = np.column_stack([t, 0.2 * t])
    return compute_velocities(Trajectory(pts, duration * t))


def helix_demo(n: int = 200, duration: float = 4.0) -> Trajectory:
    """3D demo: rising spiral segment."""
    t = np.linspace(0.0, 1.0, n)
    pts = np.column_stack([np.cos(np.pi * t), np.sin(np.pi * t), t])
    return compute_velocities(Trajectory(pts, duration * t))


@pytest.fixture
def s_curve():
    return s_curve_demo()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
