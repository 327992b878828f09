"""On-disk formats: JSON for demos/descriptors/policies, CSV for dense
rollout and field data, SVG for vector-field figures.

JSON floats round-trip losslessly (Python serializes the shortest
representation that parses back bit-exact, always >= 17 significant
digits when needed).
"""

from __future__ import annotations

import datetime
import hashlib
import json
from typing import Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCES
from .chain import ElasticChain, LinkFrame
from .core import GaussianComponent, GeometricDescriptor, Pose, Trajectory
from .errors import ValidationError
from .gmm import OrderedGmm
from .policy import LpvDsPolicy

DEMO_FORMAT = "stablemotion-demo"
POLICY_FORMAT = "stablemotion-policy"
DESCRIPTOR_FORMAT = "stablemotion-descriptor"
FORMAT_VERSION = 1


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _check_header(obj: dict, fmt: str) -> None:
    _require(isinstance(obj, dict), "top-level JSON object expected")
    _require(obj.get("format") == fmt, f"expected format {fmt!r}")
    _require(obj.get("version") == FORMAT_VERSION,
             f"unsupported version {obj.get('version')!r}")


# -- demos --------------------------------------------------------------------

def demo_to_dict(trajectories: Sequence[Trajectory],
                 via_points: Optional[np.ndarray] = None,
                 descriptor: Optional[GeometricDescriptor] = None) -> dict:
    _require(len(trajectories) > 0, "need at least one trajectory")
    d = trajectories[0].dim
    _require(all(t.dim == d for t in trajectories),
             "mixed trajectory dimensions")
    out = {
        "format": DEMO_FORMAT,
        "version": FORMAT_VERSION,
        "dimension": d,
        "trajectories": [
            {"timestamps": t.timestamps.tolist(), "points": t.points.tolist()}
            for t in trajectories],
    }
    if via_points is not None:
        out["via_points"] = np.asarray(via_points, dtype=float).tolist()
    if descriptor is not None:
        out["descriptor"] = descriptor_to_dict(descriptor, header=False)
    return out


def demo_from_dict(obj: dict):
    _check_header(obj, DEMO_FORMAT)
    d = obj["dimension"]
    trajectories = []
    for t in obj["trajectories"]:
        pts = np.asarray(t["points"], dtype=float)
        _require(pts.ndim == 2 and pts.shape[1] == d,
                 "trajectory dimension mismatch")
        trajectories.append(Trajectory(pts, np.asarray(t["timestamps"],
                                                      dtype=float)))
    via = (np.asarray(obj["via_points"], dtype=float)
           if "via_points" in obj else None)
    descriptor = (descriptor_from_dict(obj["descriptor"], header=False)
                  if "descriptor" in obj else None)
    return trajectories, via, descriptor


def save_demo(path, trajectories, via_points=None, descriptor=None) -> None:
    with open(path, "w") as fh:
        json.dump(demo_to_dict(trajectories, via_points, descriptor), fh,
                  indent=1)


def load_demo(path):
    with open(path) as fh:
        return demo_from_dict(json.load(fh))


# -- descriptors --------------------------------------------------------------

def _pose_to_dict(pose: Pose) -> dict:
    return {"position": pose.position.tolist(),
            "rotation": pose.rotation.tolist()}


def _pose_from_dict(obj: dict) -> Pose:
    position = np.asarray(obj["position"], dtype=float)
    rotation = np.asarray(obj["rotation"], dtype=float)
    d = position.shape[0]
    _require(rotation.shape == (d, d), "rotation shape mismatch")
    tol = DEFAULT_TOLERANCES.orthonormal_io
    _require(np.max(np.abs(rotation.T @ rotation - np.eye(d))) <= tol,
             "rotation is not orthonormal")
    _require(abs(np.linalg.det(rotation) - 1.0) <= tol,
             "rotation must have determinant +1")
    # re-orthonormalize so downstream strict checks pass
    u, _, vt = np.linalg.svd(rotation)
    return Pose(position, u @ vt)


def descriptor_to_dict(descriptor: GeometricDescriptor,
                       header: bool = True) -> dict:
    out = {}
    if header:
        out.update({"format": DESCRIPTOR_FORMAT, "version": FORMAT_VERSION,
                    "dimension": descriptor.dim})
    out["enter"] = (_pose_to_dict(descriptor.enter)
                    if descriptor.enter is not None else None)
    out["exit"] = (_pose_to_dict(descriptor.exit)
                   if descriptor.exit is not None else None)
    return out


def descriptor_from_dict(obj: dict, header: bool = True) -> GeometricDescriptor:
    if header:
        _check_header(obj, DESCRIPTOR_FORMAT)
    enter = _pose_from_dict(obj["enter"]) if obj.get("enter") else None
    exit_ = _pose_from_dict(obj["exit"]) if obj.get("exit") else None
    return GeometricDescriptor(enter=enter, exit=exit_)


def save_descriptor(path, descriptor: GeometricDescriptor) -> None:
    with open(path, "w") as fh:
        json.dump(descriptor_to_dict(descriptor), fh, indent=1)


def load_descriptor(path) -> GeometricDescriptor:
    with open(path) as fh:
        return descriptor_from_dict(json.load(fh))


# -- policies -----------------------------------------------------------------

def policy_to_dict(policy: LpvDsPolicy, chain: ElasticChain,
                   provenance: Optional[dict] = None) -> dict:
    b = policy.b
    return {
        "format": POLICY_FORMAT,
        "version": FORMAT_VERSION,
        "dimension": policy.dim,
        "attractor": policy.attractor.tolist(),
        "margin": policy.margin,
        "P": policy.P.tolist(),
        "components": [
            {"prior": c.prior, "mean": c.mean.tolist(),
             "covariance": c.covariance.tolist(),
             "A": policy.A[k].tolist(), "b": b[k].tolist()}
            for k, c in enumerate(policy.components)],
        "chain": {
            "joints": chain.joints.tolist(),
            "link_lengths": chain.link_lengths.tolist(),
            "order_scores": list(chain.components.order_scores),
            "link_frames": [
                {"local_mean": lf.local_mean.tolist(),
                 "local_eigvecs": lf.local_eigvecs.tolist(),
                 "eigvals": lf.eigvals.tolist(),
                 "along_index": lf.along_index}
                for lf in chain.link_frames],
        },
        "provenance": provenance or {},
    }


def policy_from_dict(obj: dict) -> Tuple[LpvDsPolicy, ElasticChain]:
    _check_header(obj, POLICY_FORMAT)
    comps = tuple(
        GaussianComponent(c["prior"], np.asarray(c["mean"], dtype=float),
                          np.asarray(c["covariance"], dtype=float))
        for c in obj["components"])
    A = np.array([c["A"] for c in obj["components"]], dtype=float)
    policy = LpvDsPolicy(comps, A, np.asarray(obj["P"], dtype=float),
                         np.asarray(obj["attractor"], dtype=float),
                         obj["margin"])
    ch = obj["chain"]
    frames = tuple(
        LinkFrame(np.asarray(f["local_mean"], dtype=float),
                  np.asarray(f["local_eigvecs"], dtype=float),
                  np.asarray(f["eigvals"], dtype=float),
                  int(f["along_index"]))
        for f in ch["link_frames"])
    gmm = OrderedGmm(comps, tuple(ch["order_scores"]))
    chain = ElasticChain(gmm, np.asarray(ch["joints"], dtype=float), frames,
                         np.asarray(ch["link_lengths"], dtype=float))
    return policy, chain


def save_policy(path, policy: LpvDsPolicy, chain: ElasticChain,
                provenance: Optional[dict] = None) -> None:
    with open(path, "w") as fh:
        json.dump(policy_to_dict(policy, chain, provenance), fh, indent=1)


def load_policy(path) -> Tuple[LpvDsPolicy, ElasticChain]:
    with open(path) as fh:
        return policy_from_dict(json.load(fh))


def make_provenance(source_path=None, descriptor=None) -> dict:
    out = {"created": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    if source_path is not None:
        with open(source_path, "rb") as fh:
            out["source_sha256"] = hashlib.sha256(fh.read()).hexdigest()
        out["source_path"] = str(source_path)
    if descriptor is not None:
        out["descriptor"] = descriptor_to_dict(descriptor, header=False)
    return out


# -- dense data ---------------------------------------------------------------

def rollout_csv(traj: Trajectory, lyapunov: Sequence[float]) -> str:
    d = traj.dim
    cols = (["t"] + [f"p{a}" for a in "xyz"[:d]] +
            [f"v{a}" for a in "xyz"[:d]] + ["V"])
    lines = [",".join(cols)]
    vel = traj.velocities if traj.velocities is not None \
        else np.zeros_like(traj.points)
    for i in range(len(traj)):
        row = ([traj.timestamps[i]] + list(traj.points[i]) + list(vel[i]) +
               [lyapunov[i]])
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def field_csv(points: np.ndarray, velocities: np.ndarray) -> str:
    d = points.shape[1]
    cols = [f"p{a}" for a in "xyz"[:d]] + [f"v{a}" for a in "xyz"[:d]]
    lines = [",".join(cols)]
    for p, v in zip(points, velocities):
        lines.append(",".join(repr(float(x)) for x in list(p) + list(v)))
    return "\n".join(lines) + "\n"


def field_svg(points: np.ndarray, velocities: np.ndarray,
              rollout_points: Optional[np.ndarray] = None,
              size: int = 640) -> str:
    """Fixed-length direction glyphs colored by speed, plus an optional
    rollout polyline overlay."""
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    pad = 0.05 * span

    def to_px(p):
        q = (p - lo + pad) / (span + 2 * pad)
        return q[0] * size, size - q[1] * size

    speeds = np.linalg.norm(velocities, axis=1)
    smax = max(float(speeds.max()), 1e-12)
    glyph = 0.35 * size / max(np.sqrt(points.shape[0]), 1.0)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>']
    for p, v, s in zip(points, velocities, speeds):
        x0, y0 = to_px(p)
        if s <= 1e-15:
            parts.append(f'<circle cx="{x0:.2f}" cy="{y0:.2f}" r="1.5" '
                         f'fill="#888"/>')
            continue
        d = v / s
        x1, y1 = x0 + glyph * d[0], y0 - glyph * d[1]
        hue = int(240 * (1.0 - s / smax))  # blue slow .. red fast
        parts.append(
            f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
            f'stroke="hsl({hue},85%,45%)" stroke-width="1.4"/>')
        parts.append(f'<circle cx="{x1:.2f}" cy="{y1:.2f}" r="1.6" '
                     f'fill="hsl({hue},85%,45%)"/>')
    if rollout_points is not None and len(rollout_points) > 1:
        px = " ".join(f"{x:.2f},{y:.2f}"
                      for x, y in (to_px(p) for p in rollout_points))
        parts.append(f'<polyline points="{px}" fill="none" stroke="black" '
                     f'stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
