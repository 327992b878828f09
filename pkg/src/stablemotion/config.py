"""Named numerical tolerances, collected in one record.

Every default used by the library lives here so that tests and callers can
tighten or relax them in one place.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # geometry
    degenerate_point: float = 1e-9      # min separation for frame construction
    orthonormal: float = 1e-9           # R^T R = I check on Pose rotations
    orthonormal_io: float = 1e-6        # looser check when loading files

    # mixtures
    prior_sum: float = 1e-9
    responsibility_sum: float = 1e-12
    em_loglik_slack: float = 1e-8       # allowed per-iteration decrease

    # chain transform
    constraint_exactness: float = 1e-9  # pinned joints hit their targets
    chain_gap: float = 1e-6             # stitching endpoint agreement
    round_trip: float = 1e-9            # chain -> components reconstruction

    # sequencing
    attractor_continuity: float = 1e-6  # segment attractor vs next start


DEFAULT_TOLERANCES = Tolerances()
