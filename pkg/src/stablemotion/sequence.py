"""Splitting demonstrations at via-points, stitching chains, and
executing multi-segment plans with one-hot activation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCES
from .chain import ElasticChain, chain_from_state
from .core import GaussianComponent, GeometricDescriptor, Trajectory
from .errors import (
    ChainGapTooLarge,
    NonMonotoneViaPoints,
    ValidationError,
    ViaPointNotOnDemo,
)
from .policy import LpvDsPolicy, evaluate


@dataclass(frozen=True)
class Segment:
    chain: ElasticChain
    descriptor: GeometricDescriptor
    policy: LpvDsPolicy
    action: Optional[dict] = None  # e.g. gripper flags from demo annotations


@dataclass(frozen=True)
class TaskPlan:
    segments: Tuple[Segment, ...]
    mode: str = "sequential"            # "sequential" | "combined"
    switch_radius: float = 0.0          # 0: 1% of workspace diameter

    def __post_init__(self):
        if not self.segments:
            raise ValidationError("plan needs at least one segment")
        if self.mode not in ("sequential", "combined"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.mode == "combined" and len(self.segments) != 1:
            raise ValidationError("combined mode uses exactly one policy")
        if self.mode == "sequential":
            tol = DEFAULT_TOLERANCES.attractor_continuity
            for a, b in zip(self.segments, self.segments[1:]):
                gap = np.linalg.norm(a.policy.attractor - b.chain.joints[0])
                if gap > tol:
                    raise ValidationError(
                        f"segment attractor and next start differ by {gap:.3e}")
        if self.switch_radius == 0.0:
            joints = np.vstack([s.chain.joints for s in self.segments])
            diameter = float(np.max(
                np.linalg.norm(joints - joints.mean(axis=0), axis=1))) * 2.0
            object.__setattr__(self, "switch_radius", 0.01 * max(diameter, 1e-12))

    @property
    def final_attractor(self) -> np.ndarray:
        return self.segments[-1].policy.attractor


class PlanExecutor:
    """Owns the mutable segment cursor for one rollout of a plan."""

    def __init__(self, plan: TaskPlan):
        self.plan = plan
        self.cursor = 0

    def step(self, xi: np.ndarray) -> Tuple[np.ndarray, int]:
        """One-hot policy evaluation with monotone proximity switching."""
        if self.plan.mode == "sequential":
            while (self.cursor < len(self.plan.segments) - 1 and
                   np.linalg.norm(xi - self.plan.segments[self.cursor]
                                  .policy.attractor) < self.plan.switch_radius):
                self.cursor += 1
        seg = self.plan.segments[self.cursor]
        return evaluate(seg.policy, xi), self.cursor


def step_plan(plan: TaskPlan, xi: np.ndarray,
              executor: Optional[PlanExecutor] = None) -> Tuple[np.ndarray, int]:
    """Stateless convenience wrapper; pass an executor to keep the cursor."""
    if executor is None:
        executor = PlanExecutor(plan)
    return executor.step(xi)


def split_demo(traj: Trajectory, via_points: Sequence[np.ndarray],
               radius: float) -> list:
    """Cut the demo at each via-point's closest-approach index."""
    if len(via_points) == 0:
        raise ValidationError("need at least one via-point")
    pts = traj.points
    indices = []
    for v in via_points:
        v = np.asarray(v, dtype=float)
        dist = np.linalg.norm(pts - v, axis=1)
        i = int(np.argmin(dist))
        if dist[i] > radius:
            raise ViaPointNotOnDemo(
                f"via-point {v} is {dist[i]:.3g} from the demo (radius {radius})")
        indices.append(i)
    if np.any(np.diff(indices) <= 0):
        raise NonMonotoneViaPoints(f"split indices {indices} not increasing")
    if indices[0] == 0 or indices[-1] == len(traj) - 1:
        raise NonMonotoneViaPoints("via-points must be interior to the demo")

    bounds = [0] + indices + [len(traj) - 1]
    out = []
    for a, b in zip(bounds, bounds[1:]):
        out.append(Trajectory(pts[a:b + 1], traj.timestamps[a:b + 1]))
    return out


def stitch_chains(chains: Sequence[ElasticChain]) -> ElasticChain:
    """Concatenate chains sharing endpoints into one chain.

    Shared boundary joints are deduplicated and priors renormalized so the
    stitched mixture is again a valid ordered chain.
    """
    if not chains:
        raise ValidationError("nothing to stitch")
    tol = DEFAULT_TOLERANCES.chain_gap
    joints = [chains[0].joints]
    for prev, nxt in zip(chains, chains[1:]):
        gap = np.linalg.norm(prev.joints[-1] - nxt.joints[0])
        if gap > tol:
            raise ChainGapTooLarge(f"endpoint gap {gap:.3e} exceeds {tol}")
        joints.append(nxt.joints[1:])
    all_joints = np.vstack(joints)

    comps = [c for ch in chains for c in ch.components.components]
    total = sum(c.prior for c in comps)
    comps = [GaussianComponent(c.prior / total, c.mean, c.covariance)
             for c in comps]
    # re-score along the concatenated polyline so ordering stays monotone
    seg = np.linalg.norm(np.diff(all_joints, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)]) / max(np.sum(seg), 1e-300)
    scores = 0.5 * (cum[:-1] + cum[1:])
    return chain_from_state(comps, all_joints, tuple(scores))
