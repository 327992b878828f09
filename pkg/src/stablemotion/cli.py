"""Command-line surface tying the pipeline together.

Exit codes: 0 success, 1 usage, 2 validation/parse error, 3 numerical
failure. A JSON config of option defaults may be passed with --config or
the STABLEMOTION_CONFIG environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import fileio
from .core import Trajectory, compute_velocities
from .errors import (
    EmDidNotImprove,
    NonFiniteState,
    OptimizationDiverged,
    RankDeficientSystem,
    SingularCovariance,
    StableMotionError,
    ValidationError,
)
from .evaluation import (
    RolloutConfig,
    endpoints_distance,
    goal_cosine,
    rollout,
    sample_field,
    start_cosine,
)
from .gmm import GmmFitConfig
from .pipeline import adapt, learn
from .policy import EstimateOptions, evaluate_batch, lyapunov_value
from .profile import ProfileConfig
from .sequence import split_demo, stitch_chains

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (OptimizationDiverged, RankDeficientSystem,
                     EmDidNotImprove, NonFiniteState, SingularCovariance)

CONFIG_ENV = "STABLEMOTION_CONFIG"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config(path):
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    return cfg


def _report(args, payload: dict) -> None:
    if not args.quiet:
        print(json.dumps(payload))


def _single_demo(path):
    trajectories, via, descriptor = fileio.load_demo(path)
    if len(trajectories) != 1:
        raise ValidationError("command expects a single-trajectory demo file")
    return compute_velocities(trajectories[0]), via, descriptor


def _gmm_cfg(args, cfg) -> GmmFitConfig:
    return GmmFitConfig(
        k_min=getattr(args, "k_min", None) or cfg.get("k_min", 1),
        k_max=getattr(args, "k_max", None) or cfg.get("k_max", 8),
        restarts=getattr(args, "restarts", None) or cfg.get("restarts", 5),
        seed=args.seed)


def _estimate_opts(args, cfg) -> EstimateOptions:
    return EstimateOptions(margin=cfg.get("margin", 1e-2), seed=args.seed)


def _mse(policy, points, velocities) -> float:
    r = velocities - evaluate_batch(policy, points)
    return float(np.mean(np.sum(r * r, axis=1)))


def cmd_fit(args, cfg) -> int:
    demo, _, _ = _single_demo(args.demo)
    t0 = time.perf_counter()
    chain, policy = learn(demo, _gmm_cfg(args, cfg), _estimate_opts(args, cfg))
    elapsed = time.perf_counter() - t0
    fileio.save_policy(args.output, policy, chain,
                       fileio.make_provenance(source_path=args.demo))
    _report(args, {"command": "fit", "k": len(policy.components),
                   "mse": _mse(policy, demo.points, demo.velocities),
                   "fit_time_s": elapsed, "output": args.output})
    return EXIT_OK


def cmd_transform(args, cfg) -> int:
    policy, chain = fileio.load_policy(args.policy)
    descriptor = fileio.load_descriptor(args.descriptor)
    profile_cfg = ProfileConfig(
        p=cfg.get("profile_points", max(200, 10 * len(chain.components.components))),
        dt=cfg.get("profile_dt", 0.01))
    t0 = time.perf_counter()
    new_chain, profile, new_policy = adapt(chain, descriptor, profile_cfg,
                                           _estimate_opts(args, cfg))
    elapsed = time.perf_counter() - t0
    fileio.save_policy(args.output, new_policy, new_chain,
                       fileio.make_provenance(source_path=args.policy,
                                              descriptor=descriptor))
    applied = new_chain.endpoint_descriptor()
    run = rollout(new_policy, applied.enter.position,
                  _rollout_cfg_for(new_chain, cfg))
    _report(args, {
        "command": "transform",
        "start_cos": start_cosine(run.trajectory, applied),
        "goal_cos": goal_cosine(run.trajectory, applied),
        "endpoints_distance": endpoints_distance(
            run.trajectory, applied.enter, applied.exit),
        "converged": run.converged,
        "total_time_s": elapsed, "output": args.output})
    return EXIT_OK


def _rollout_cfg_for(chain, cfg) -> RolloutConfig:
    joints = chain.joints
    diameter = 2.0 * float(np.max(np.linalg.norm(
        joints - joints.mean(axis=0), axis=1)))
    return RolloutConfig(
        dt=cfg.get("rollout_dt", 0.01),
        max_steps=cfg.get("rollout_max_steps", 100_000),
        convergence_radius=cfg.get("rollout_convergence_radius",
                                   1e-3 * max(diameter, 1e-9)))


def cmd_rollout(args, cfg) -> int:
    policy, chain = fileio.load_policy(args.policy)
    start = (np.array([float(v) for v in args.start.split(",")])
             if args.start else chain.joints[0])
    run = rollout(policy, start, _rollout_cfg_for(chain, cfg))
    traj = run.trajectory
    lyap = [lyapunov_value(policy, p) for p in traj.points]
    with open(args.output, "w") as fh:
        fh.write(fileio.rollout_csv(compute_velocities(traj)
                                    if len(traj) > 1 else traj, lyap))
    _report(args, {"command": "rollout", "steps": len(traj),
                   "converged": run.converged, "output": args.output})
    return EXIT_OK


def cmd_field(args, cfg) -> int:
    policy, chain = fileio.load_policy(args.policy)
    if policy.dim != 2:
        raise ValidationError("field sampling is 2D only")
    joints = chain.joints
    lo = joints.min(axis=0)
    hi = joints.max(axis=0)
    pad = 0.25 * max(float(np.max(hi - lo)), 1e-9)
    bounds = ((lo[0] - pad, hi[0] + pad), (lo[1] - pad, hi[1] + pad))
    points, velocities = sample_field(policy, bounds, args.resolution)
    with open(args.output, "w") as fh:
        fh.write(fileio.field_csv(points, velocities))
    if args.svg:
        run = rollout(policy, chain.joints[0], _rollout_cfg_for(chain, cfg))
        with open(args.svg, "w") as fh:
            fh.write(fileio.field_svg(points, velocities,
                                      run.trajectory.points))
    _report(args, {"command": "field", "samples": len(points),
                   "output": args.output, "svg": args.svg})
    return EXIT_OK


def cmd_metrics(args, cfg) -> int:
    policy, chain = fileio.load_policy(args.policy)
    applied = chain.endpoint_descriptor()
    run = rollout(policy, applied.enter.position, _rollout_cfg_for(chain, cfg))
    payload = {
        "start_cos": start_cosine(run.trajectory, applied),
        "goal_cos": goal_cosine(run.trajectory, applied),
        "endpoints_distance": endpoints_distance(
            run.trajectory, applied.enter, applied.exit),
        "converged": run.converged,
    }
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(payload, fh, indent=1)
    _report(args, {"command": "metrics", **payload})
    return EXIT_OK


def _resample(demo: Trajectory, n: int) -> Trajectory:
    t = np.linspace(demo.timestamps[0], demo.timestamps[-1], n)
    pts = np.column_stack([
        np.interp(t, demo.timestamps, demo.points[:, j])
        for j in range(demo.dim)])
    return Trajectory(pts, t)


def cmd_bench(args, cfg) -> int:
    demo, _, _ = _single_demo(args.demo)
    lengths = [int(v) for v in args.lengths.split(",")]
    rows = []
    for n in lengths:
        resampled = compute_velocities(_resample(demo, n))
        chain, _ = learn(resampled, _gmm_cfg(args, cfg),
                         _estimate_opts(args, cfg))
        # shift both ends by a tenth of the span: a representative re-target
        span = resampled.end - resampled.start
        offset = 0.1 * np.linalg.norm(span) * np.ones(resampled.dim) / \
            np.sqrt(resampled.dim)
        desc = chain.endpoint_descriptor()
        moved = type(desc)(
            enter=type(desc.enter)(desc.enter.position + offset,
                                   desc.enter.rotation),
            exit=type(desc.exit)(desc.exit.position + offset,
                                 desc.exit.rotation))
        from .evaluation import bench_adaptation
        report = bench_adaptation(
            chain, moved, ProfileConfig(p=n, dt=resampled.median_dt()),
            repeats=args.repeats, estimate_opts=_estimate_opts(args, cfg))
        rows.append({"T_n": n,
                     "transform_ms": 1e3 * report.transform_time,
                     "estimate_ms": 1e3 * report.estimate_time,
                     "total_ms": 1e3 * report.total_time})
    table = "T_n,transform_ms,estimate_ms,total_ms\n" + "\n".join(
        f'{r["T_n"]},{r["transform_ms"]:.3f},{r["estimate_ms"]:.3f},'
        f'{r["total_ms"]:.3f}' for r in rows) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(table)
    if not args.quiet:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_stitch(args, cfg) -> int:
    chains = []
    for path in args.policies:
        _, chain = fileio.load_policy(path)
        chains.append(chain)
    stitched = stitch_chains(chains)
    profile_cfg = ProfileConfig(
        p=cfg.get("profile_points", max(200, 20 * len(stitched.components.components))),
        dt=cfg.get("profile_dt", 0.01))
    from .profile import regenerate_profile
    from .policy import estimate
    profile = regenerate_profile(stitched.joints, profile_cfg)
    policy = estimate(list(stitched.components.components), profile.points,
                      profile.velocities, stitched.joints[-1],
                      _estimate_opts(args, cfg))
    fileio.save_policy(args.output, policy, stitched,
                       fileio.make_provenance())
    _report(args, {"command": "stitch", "segments": len(args.policies),
                   "k": len(policy.components), "output": args.output})
    return EXIT_OK


def cmd_split(args, cfg) -> int:
    demo, via_from_file, _ = _single_demo(args.demo)
    if args.via:
        via = np.array([[float(v) for v in p.split(",")]
                        for p in args.via.split(";")])
    elif via_from_file is not None:
        via = via_from_file
    else:
        raise ValidationError("no via-points given (flag or demo file)")
    segments = split_demo(demo, via, args.radius)
    outputs = []
    for i, seg in enumerate(segments):
        path = f"{args.output_prefix}{i}.json"
        fileio.save_demo(path, [seg])
        outputs.append(path)
    _report(args, {"command": "split", "segments": len(segments),
                   "outputs": outputs})
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="stablemotion",
                     description="Learn, re-target, and execute stable "
                                 "motion policies from one demonstration.")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--config", default=None,
                        help=f"JSON defaults (or ${CONFIG_ENV})")
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a policy from a demo file")
    p.add_argument("demo")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--k-min", dest="k_min", type=int, default=None)
    p.add_argument("--k-max", dest="k_max", type=int, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("transform", help="re-target a policy to a descriptor")
    p.add_argument("policy")
    p.add_argument("descriptor")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("rollout", help="integrate a policy, emit CSV")
    p.add_argument("policy")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--start", default=None, help="comma-separated start point")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("field", help="sample the vector field (CSV + SVG)")
    p.add_argument("policy")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--svg", default=None)
    p.add_argument("--resolution", type=int, default=20)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("metrics", help="adaptation metrics as JSON")
    p.add_argument("policy")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="timing sweep over demo lengths")
    p.add_argument("demo")
    p.add_argument("--lengths", default="100,200,400")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stitch", help="combine segment policies into one")
    p.add_argument("policies", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("split", help="cut a demo at via-points")
    p.add_argument("demo")
    p.add_argument("--via", default=None,
                   help="semicolon-separated comma points, e.g. '1,2;3,4'")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--output-prefix", default="segment_")
    p.set_defaults(func=cmd_split)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except _NUMERICAL_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, StableMotionError, json.JSONDecodeError,
            FileNotFoundError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
