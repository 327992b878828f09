"""Stable state-dependent mixture-of-linear-systems motion policy.

The policy is xdot = sum_k gamma_k(x) A_k (x - attractor), where gamma is
the posterior responsibility of the mixing model. Stability against the
quadratic certificate V = (x - x*)^T P (x - x*) is guaranteed by
construction: each A_k is parameterized as

    A_k = P^{-1} (S_k - (C_k C_k^T + eps I))

with S_k skew-symmetric and C_k an unconstrained lower-triangular factor,
so A_k^T P + P A_k = -2 (C_k C_k^T + eps I) is uniformly negative
definite. The data fit is then a smooth unconstrained least-squares
problem solved with L-BFGS and an analytic gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .core import GaussianComponent, _frozen
from .errors import InfeasibleAttractor, InsufficientData, OptimizationDiverged
from .gmm import responsibilities, responsibilities_batch


@dataclass(frozen=True)
class EstimateOptions:
    margin: float = 1e-2        # eps: enforced decay of A^T P + P A
    ridge: float = 1e-6         # per-sample ||A_k||_F^2 weight; tames the
                                # gain in directions the data never excites
    max_iters: int = 500
    grad_tol: float = 1e-8
    seed: int = 0               # reserved; the solve itself is deterministic
    P: Optional[np.ndarray] = None  # None: identity certificate


@dataclass(frozen=True)
class LpvDsPolicy:
    components: Tuple[GaussianComponent, ...]
    A: np.ndarray               # (K, d, d)
    P: np.ndarray               # (d, d) Lyapunov certificate
    attractor: np.ndarray
    margin: float

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "P", _frozen(self.P))
        object.__setattr__(self, "attractor", _frozen(self.attractor))
        K, d = len(self.components), self.attractor.shape[0]
        if self.A.shape != (K, d, d):
            raise ValueError("A shape must be (K, d, d)")
        if np.linalg.eigvalsh(0.5 * (self.P + self.P.T))[0] <= 0:
            raise ValueError("P must be positive definite")
        if self.margin <= 0:
            raise ValueError("margin must be positive")

    @property
    def dim(self) -> int:
        return self.attractor.shape[0]

    @property
    def b(self) -> np.ndarray:
        """Offsets b_k = -A_k attractor (constructed, never fitted)."""
        return -self.A @ self.attractor


def evaluate(policy: LpvDsPolicy, xi: np.ndarray) -> np.ndarray:
    """Policy velocity at one state."""
    gamma = responsibilities(policy.components, xi)
    y = np.asarray(xi, dtype=float) - policy.attractor
    return np.einsum("k,kij,j->i", gamma, policy.A, y)


def evaluate_batch(policy: LpvDsPolicy, xi: np.ndarray) -> np.ndarray:
    """Policy velocities for a batch of states, shape (n, d)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    gamma = responsibilities_batch(policy.components, xi)
    y = xi - policy.attractor
    return np.einsum("tk,kij,tj->ti", gamma, policy.A, y)


def lyapunov_value(policy: LpvDsPolicy, xi: np.ndarray) -> float:
    y = np.asarray(xi, dtype=float) - policy.attractor
    return float(y @ policy.P @ y)


def lyapunov_rate(policy: LpvDsPolicy, xi: np.ndarray) -> float:
    """d/dt of the Lyapunov value along the policy flow: 2 (x-x*)^T P f(x)."""
    y = np.asarray(xi, dtype=float) - policy.attractor
    return float(2.0 * y @ policy.P @ evaluate(policy, xi))


def constraint_residual(policy: LpvDsPolicy) -> float:
    """max over k of lambda_max(A_k^T P + P A_k) + margin; <= 0 is feasible."""
    worst = -np.inf
    for A in policy.A:
        M = A.T @ policy.P + policy.P @ A
        worst = max(worst, float(np.linalg.eigvalsh(0.5 * (M + M.T))[-1]))
    return worst + policy.margin


# -- parameterization ---------------------------------------------------------

def _param_counts(d: int) -> Tuple[int, int]:
    return d * (d - 1) // 2, d * (d + 1) // 2  # skew, lower-triangular


def _unpack(params: np.ndarray, K: int, d: int):
    """params -> (S, C) with S (K,d,d) skew and C (K,d,d) lower-triangular."""
    ns, nc = _param_counts(d)
    iu = np.triu_indices(d, 1)
    il = np.tril_indices(d)
    S = np.zeros((K, d, d))
    C = np.zeros((K, d, d))
    for k in range(K):
        off = k * (ns + nc)
        s = params[off:off + ns]
        c = params[off + ns:off + ns + nc]
        S[k][iu] = s
        S[k] -= S[k].T
        C[k][il] = c
    return S, C


def _pack(S: np.ndarray, C: np.ndarray) -> np.ndarray:
    K, d, _ = S.shape
    iu = np.triu_indices(d, 1)
    il = np.tril_indices(d)
    return np.concatenate([np.concatenate([S[k][iu], C[k][il]])
                           for k in range(K)])


def _assemble_A(S: np.ndarray, C: np.ndarray, P_inv: np.ndarray,
                eps: float) -> np.ndarray:
    d = S.shape[1]
    M = C @ np.swapaxes(C, 1, 2) + eps * np.eye(d)
    return np.einsum("ij,kjl->kil", P_inv, S - M)


def objective_and_gradient(params: np.ndarray, gamma: np.ndarray,
                           Y: np.ndarray, V: np.ndarray, P_inv: np.ndarray,
                           eps: float, K: int, d: int, reg: float = 0.0,
                           shrink: float = 0.0):
    """Sum-of-squares fitting error (plus a ridge on A) and its gradient.

    gamma: (T, K) fixed mixing weights; Y: (T, d) attractor-centered
    states; V: (T, d) velocity targets. The ridge pulls each A_k toward
    -shrink * I, so directions the data never excites get a moderate
    contraction instead of an arbitrary (stiff or sluggish) gain.
    """
    S, C = _unpack(params, K, d)
    A = _assemble_A(S, C, P_inv, eps)
    pred = np.einsum("tk,kij,tj->ti", gamma, A, Y)
    r = V - pred
    Adev = A + shrink * np.eye(d)
    J = float(np.sum(r * r)) + reg * float(np.sum(Adev * Adev))

    G = -2.0 * np.einsum("tk,ti,tj->kij", gamma, r, Y)   # dJ/dA_k
    G += 2.0 * reg * Adev
    B = np.einsum("ji,kjl->kil", P_inv, G)               # P^{-T} G
    iu = np.triu_indices(d, 1)
    il = np.tril_indices(d)
    grads = []
    for k in range(K):
        dS = B[k] - B[k].T
        dC = -(B[k] + B[k].T) @ C[k]
        grads.append(np.concatenate([dS[iu], dC[il]]))
    return J, np.concatenate(grads)


def _initial_params(gamma: np.ndarray, Y: np.ndarray, V: np.ndarray,
                    P: np.ndarray, eps: float, reg: float = 0.0,
                    shrink: float = 0.0) -> np.ndarray:
    """Warm start: per-component ridge least-squares A, clamped feasible."""
    T, d = Y.shape
    K = gamma.shape[1]
    S0 = np.zeros((K, d, d))
    C0 = np.zeros((K, d, d))
    for k in range(K):
        w = gamma[:, k]
        Syy = (w[:, None] * Y).T @ Y + max(reg, 1e-9) * np.eye(d)
        Svy = (w[:, None] * V).T @ Y - reg * shrink * np.eye(d)
        A_ls = Svy @ np.linalg.inv(Syy)
        W = P @ A_ls
        S0[k] = 0.5 * (W - W.T)
        sym = 0.5 * (W + W.T)
        vals, vecs = np.linalg.eigh(sym)
        vals = np.minimum(vals, -eps)
        M = -(vecs * vals) @ vecs.T          # = C C^T + eps I, PSD shifted
        C0[k] = np.linalg.cholesky(M - eps * np.eye(d) + 1e-10 * np.eye(d))
    return _pack(S0, C0)


def estimate(components: Sequence[GaussianComponent], data: np.ndarray,
             velocities: np.ndarray, attractor: np.ndarray,
             opts: EstimateOptions = EstimateOptions()) -> LpvDsPolicy:
    """Fit the linear systems to (state, velocity) pairs, stably.

    Minimizes sum_t ||v_t - f(x_t)||^2 over the feasible cone; the mixing
    weights are fixed by the components, so the objective is quadratic in
    each A_k and smooth in the free parameterization.
    """
    data = np.asarray(data, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    attractor = np.asarray(attractor, dtype=float)
    if not np.all(np.isfinite(attractor)):
        raise InfeasibleAttractor("attractor must be finite")
    K = len(components)
    T, d = data.shape
    if velocities.shape != data.shape:
        raise ValueError("data and velocities must have the same shape")
    if T < 10 * K:
        raise InsufficientData(f"{T} samples < 10*K = {10 * K}")

    P = np.eye(d) if opts.P is None else np.asarray(opts.P, dtype=float)
    P_inv = np.linalg.inv(P)
    eps = opts.margin

    # condition the quadratic: center at the attractor, scale by the
    # workspace radius (A is invariant to the scaling, the objective is not)
    Y = data - attractor
    scale = max(float(np.max(np.linalg.norm(Y, axis=1))), 1e-12)
    Yn = Y / scale
    Vn = velocities / scale

    gamma = responsibilities_batch(components, data)
    reg = opts.ridge * T
    # shrinkage target for unexcited directions: a few times the data's
    # speed-to-radius ratio, so they contract strictly faster than the
    # fitted modes -- the slow mode (and hence the asymptotic approach
    # direction into the attractor) must stay the demonstrated one
    shrink = 10.0 * float(np.mean(np.linalg.norm(Vn, axis=1)) /
                         max(np.mean(np.linalg.norm(Yn, axis=1)), 1e-12))
    x0 = _initial_params(gamma, Yn, Vn, P, eps, reg, shrink)
    J0, _ = objective_and_gradient(x0, gamma, Yn, Vn, P_inv, eps, K, d,
                                   reg, shrink)

    res = minimize(objective_and_gradient, x0, jac=True,
                   args=(gamma, Yn, Vn, P_inv, eps, K, d, reg, shrink),
                   method="L-BFGS-B",
                   options={"maxiter": opts.max_iters, "gtol": opts.grad_tol,
                            "ftol": 1e-14})
    if not np.all(np.isfinite(res.x)) or not np.isfinite(res.fun):
        raise OptimizationDiverged("non-finite optimizer state")
    best = res.x if res.fun <= J0 else x0
    S, C = _unpack(best, K, d)
    A = _assemble_A(S, C, P_inv, eps)
    return LpvDsPolicy(tuple(components), A, P, attractor, eps)
