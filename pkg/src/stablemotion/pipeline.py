"""High-level train/adapt flows built from the lower modules."""

from __future__ import annotations

from typing import Tuple

from .chain import ElasticChain, build_chain
from .core import GeometricDescriptor, Trajectory, compute_velocities
from .gmm import GmmFitConfig, fit_gmm, order_components
from .policy import EstimateOptions, LpvDsPolicy, estimate
from .profile import ProfileConfig
from .evaluation import adapt_policy


def learn(demo: Trajectory,
          gmm_cfg: GmmFitConfig = GmmFitConfig(),
          opts: EstimateOptions = EstimateOptions()) -> Tuple[ElasticChain, LpvDsPolicy]:
    """Fit mixture + chain on one demo and estimate its policy.

    The attractor is the demonstration endpoint; velocities are derived by
    finite differences when the demo does not carry them.
    """
    if demo.velocities is None:
        demo = compute_velocities(demo)
    components = fit_gmm(demo.points, gmm_cfg)
    ordered = order_components(components, demo)
    chain = build_chain(ordered, demo)
    policy = estimate(list(ordered.components), demo.points, demo.velocities,
                      demo.end, opts)
    return chain, policy


def adapt(chain: ElasticChain, descriptor: GeometricDescriptor,
          profile_cfg: ProfileConfig,
          opts: EstimateOptions = EstimateOptions()):
    """Re-target a learned chain to a new descriptor; returns
    (new_chain, profile, policy)."""
    new_chain, profile, policy, _, _ = adapt_policy(
        chain, descriptor, profile_cfg, opts)
    return new_chain, profile, policy
