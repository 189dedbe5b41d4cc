"""Cost-constrained LQR machinery.

Problem container, discrete Lyapunov solves (doubling), the algebraic
Riccati equation (fixed-point iteration), cost evaluation J_i(K), weighted
penalty matrices, the Lagrangian, and its exact policy gradient.

Conventions: dynamics x+ = A x + B u, policy u = -K x, closed loop
A - B K.  A gain K is stabilizing when rho(A - B K) < 1.  Costs are
J_i(K) = Tr(P_i(K) sigma0) with P_i the closed-loop value matrix of the
i-th penalty pair.
"""

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    InstabilityError,
)

# Strictness guard on rho(A - B K) < 1; protects downstream Lyapunov solves
# from closed loops that are stable only up to roundoff.
STABILITY_GUARD = 1e-12

DEFAULT_TOL = 1e-12
ARE_MAX_ITER = 1_000_000
DLYAP_MAX_ITER = 120


@dataclass(frozen=True)
class Gain:
    """Feedback matrix with its cached closed-loop spectral radius.

    ``rho`` is spectral_radius(A - B K) for the problem the gain was built
    against; construct via :meth:`CcLqrProblem.gain`.
    """

    K: np.ndarray
    rho: float

    @property
    def is_stabilizing(self):
        return self.rho < 1.0 - STABILITY_GUARD


@dataclass(frozen=True)
class WeightedPenalty:
    """Multiplier-weighted penalty pair Q_lam = Q_0 + sum_i lam_i Q_i (and
    likewise R_lam); positive definite for any lam >= 0."""

    Q: np.ndarray
    R: np.ndarray
    lam: np.ndarray


class CcLqrProblem:
    """Container for one cost-constrained LQR instance.

    Parameters
    ----------
    A, B : array_like
        System matrices, n x n and n x m; (A, B) must be controllable.
    Q, R : sequences of array_like
        N+1 penalty pairs indexed 0..N.  Q[0], R[0] must be positive
        definite, the rest positive semidefinite.
    c : array_like
        N positive constraint limits.
    sigma0 : array_like, optional
        Initial-state covariance E[x0 x0^T]; defaults to the identity.

    All invariants are checked here so downstream solvers can assume them.
    """

    def __init__(self, A, B, Q, R, c, sigma0=None):
        A = matcore.as_square(A, "A")
        B = matcore.as_matrix(B, "B")
        n = A.shape[0]
        if B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape[0]}")
        m = B.shape[1]

        if len(Q) != len(R) or len(Q) < 1:
            raise DimensionError("Q and R must be equally long, length >= 1")
        Qs, Rs = [], []
        for i, (Qi, Ri) in enumerate(zip(Q, R)):
            Qi = matcore.check_symmetric(Qi, name=f"Q_{i}")
            Ri = matcore.check_symmetric(Ri, name=f"R_{i}")
            if Qi.shape != (n, n):
                raise DimensionError(f"Q_{i} must be {n}x{n}, got {Qi.shape}")
            if Ri.shape != (m, m):
                raise DimensionError(f"R_{i} must be {m}x{m}, got {Ri.shape}")
            if i == 0:
                if not matcore.is_pd(Qi):
                    raise DomainError("Q_0 not positive definite")
                if not matcore.is_pd(Ri):
                    raise DomainError("R_0 not positive definite")
            else:
                if not matcore.is_psd(Qi):
                    raise DomainError(f"Q_{i} not positive semidefinite")
                if not matcore.is_psd(Ri):
                    raise DomainError(f"R_{i} not positive semidefinite")
            Qs.append(Qi)
            Rs.append(Ri)

        c = matcore.as_vector(c, "c")
        if len(c) != len(Qs) - 1:
            raise DimensionError(
                f"c must have length {len(Qs) - 1} (one limit per constraint), got {len(c)}"
            )
        if np.any(c <= 0):
            raise DomainError("constraint limits c must be strictly positive")

        if sigma0 is None:
            sigma0 = np.eye(n)
        sigma0 = matcore.check_symmetric(sigma0, name="sigma0")
        if sigma0.shape != (n, n):
            raise DimensionError(f"sigma0 must be {n}x{n}, got {sigma0.shape}")
        if not matcore.is_pd(sigma0):
            raise DomainError("sigma0 not positive definite")

        _check_controllable(A, B)

        self.A = A
        self.B = B
        self.Q = Qs
        self.R = Rs
        self.c = c
        self.sigma0 = sigma0

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def n_constraints(self):
        return len(self.c)

    def closed_loop(self, K):
        K = matcore.as_matrix(K, "K")
        if K.shape != (self.m, self.n):
            raise DimensionError(f"K must be {self.m}x{self.n}, got {K.shape}")
        return self.A - self.B @ K

    def gain(self, K):
        """Wrap a feedback matrix as a Gain with its cached spectral radius."""
        if isinstance(K, Gain):
            return K
        Acl = self.closed_loop(K)
        return Gain(K=np.array(K, dtype=float), rho=matcore.spectral_radius(Acl))


def _check_controllable(A, B, threshold=1e-10):
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    ctrb = np.hstack(blocks)
    sv = np.linalg.svd(ctrb, compute_uv=False)
    if sv[0] == 0 or np.sum(sv > threshold * sv[0]) < n:
        raise DomainError("pair (A, B) is not controllable")


def is_stabilizing(prob, K, margin=0.0):
    """True iff rho(A - B K) < 1 - margin (strict, with a 1e-12 guard)."""
    g = prob.gain(K)
    return g.rho < 1.0 - margin - STABILITY_GUARD


def _require_stabilizing(prob, K, what="gain"):
    g = prob.gain(K)
    if not g.is_stabilizing:
        raise InstabilityError(
            f"{what} is not stabilizing: rho(A - B K) = {g.rho:.12g} >= 1"
        )
    return g


def _dlyap_doubling(Acl, M, tol):
    """Doubling core; callers guarantee rho(Acl) < 1 and M symmetric."""
    P = M.copy()
    S = Acl.copy()
    for _ in range(DLYAP_MAX_ITER):
        incr = S.T @ P @ S
        P = (P + incr + (P + incr).T) / 2.0
        if not np.all(np.isfinite(P)):
            raise ConvergenceError("Lyapunov doubling iteration diverged")
        if np.linalg.norm(incr) <= tol * max(1.0, np.linalg.norm(P)):
            return P
        S = S @ S
    raise ConvergenceError("Lyapunov doubling iteration exhausted its budget")


def solve_dlyap(Acl, M, tol=DEFAULT_TOL):
    """Solve P = M + Acl^T P Acl for a stable Acl and symmetric PSD M.

    Doubling iteration: P <- P + S^T P S, S <- S^2 sums the series
    sum_t (Acl^t)^T M Acl^t in O(log 1/tol) steps.  The residual
    ||P - M - Acl^T P Acl|| <= tol * (1 + ||P||) is verified before
    returning.
    """
    Acl = matcore.as_square(Acl, "Acl")
    M = matcore.check_symmetric(M, name="M")
    if M.shape != Acl.shape:
        raise DimensionError(f"M must match Acl shape {Acl.shape}, got {M.shape}")
    rho = matcore.spectral_radius(Acl)
    if rho >= 1.0 - STABILITY_GUARD:
        raise InstabilityError(f"Lyapunov solve needs rho(Acl) < 1, got {rho:.12g}")

    P = _dlyap_doubling(Acl, M, tol)
    residual = np.linalg.norm(P - M - Acl.T @ P @ Acl)
    if residual > tol * (1.0 + np.linalg.norm(P)):
        raise ConvergenceError(
            f"Lyapunov residual {residual:.3e} above tolerance after convergence"
        )
    return matcore.ensure_finite(P, "Lyapunov solution")


def solve_dsigma(Acl, sigma0, tol=DEFAULT_TOL):
    """Solve Sigma = sigma0 + Acl Sigma Acl^T (state-correlation recursion).

    Transposed twin of :func:`solve_dlyap`.
    """
    Acl = matcore.as_square(Acl, "Acl")
    return solve_dlyap(Acl.T, sigma0, tol)


def weighted_penalty(prob, lam):
    """Weighted penalty matrices Q_lam = Q_0 + sum lam_i Q_i, same for R."""
    lam = matcore.as_vector(lam, "lambda")
    if len(lam) != prob.n_constraints:
        raise DimensionError(
            f"lambda must have length {prob.n_constraints}, got {len(lam)}"
        )
    if np.any(lam < 0):
        raise DomainError("multiplier entries must be nonnegative")
    Q = prob.Q[0].copy()
    R = prob.R[0].copy()
    for li, Qi, Ri in zip(lam, prob.Q[1:], prob.R[1:]):
        Q += li * Qi
        R += li * Ri
    return WeightedPenalty(Q=Q, R=R, lam=lam)


def cost_matrix(prob, K, i, tol=DEFAULT_TOL):
    """Closed-loop value matrix P_i(K) = Q_i + K^T R_i K + Acl^T P_i Acl."""
    if not 0 <= i <= prob.n_constraints:
        raise DomainError(f"cost index {i} out of range 0..{prob.n_constraints}")
    g = _require_stabilizing(prob, K)
    Acl = prob.closed_loop(g.K)
    M = prob.Q[i] + g.K.T @ prob.R[i] @ g.K
    return solve_dlyap(Acl, M, tol)


def cost(prob, K, i, tol=DEFAULT_TOL):
    """LQR cost J_i(K) = Tr(P_i(K) sigma0); infinite (error) off the
    stabilizing set."""
    P = cost_matrix(prob, K, i, tol)
    return float(np.trace(P @ prob.sigma0))


def costs(prob, K, tol=DEFAULT_TOL):
    """All costs [J_0(K), ..., J_N(K)] in one call."""
    g = _require_stabilizing(prob, K)
    Acl = prob.closed_loop(g.K)
    out = []
    for Qi, Ri in zip(prob.Q, prob.R):
        P = solve_dlyap(Acl, Qi + g.K.T @ Ri @ g.K, tol)
        out.append(float(np.trace(P @ prob.sigma0)))
    return np.array(out)


def solve_are(prob, lam, tol=DEFAULT_TOL, max_iter=ARE_MAX_ITER, P0=None, damping=1.0):
    """Riccati solve for the weighted LQR defined by lam.

    Fixed-point iteration on
        P = A^T P A + Q_lam - A^T P B (R_lam + B^T P B)^{-1} B^T P A,
    symmetrized each step, started from Q_lam (or ``P0``).  ``damping``
    blends old and new iterates (1.0 = plain recursion, which is monotone
    convergent from any PSD start here).  Returns the positive definite
    solution together with the minimizing gain
    K* = (R_lam + B^T P B)^{-1} B^T P A, which is always stabilizing.
    """
    if not 0.0 < damping <= 1.0:
        raise DomainError("damping must lie in (0, 1]")
    wp = weighted_penalty(prob, lam)
    A, B = prob.A, prob.B

    P = wp.Q.copy() if P0 is None else matcore.check_symmetric(P0, name="P0")
    for _ in range(max_iter):
        BtP = B.T @ P
        G = wp.R + BtP @ B
        BtPA = BtP @ A
        Pn = A.T @ P @ A + wp.Q - BtPA.T @ np.linalg.solve(G, BtPA)
        Pn = (Pn + Pn.T) / 2.0
        if damping < 1.0:
            Pn = (1.0 - damping) * P + damping * Pn
        if not np.all(np.isfinite(Pn)):
            raise ConvergenceError("Riccati fixed-point iteration diverged")
        delta = np.linalg.norm(Pn - P)
        P = Pn
        if delta <= tol * (1.0 + np.linalg.norm(P)):
            break
    else:
        raise ConvergenceError(
            f"Riccati fixed-point iteration did not converge in {max_iter} steps"
        )

    BtP = B.T @ P
    K = np.linalg.solve(wp.R + BtP @ B, BtP @ A)
    gain = prob.gain(K)
    if not gain.is_stabilizing:
        raise ConvergenceError(
            f"Riccati iteration returned a non-stabilizing gain (rho={gain.rho:.12g})"
        )
    matcore.ensure_finite(P, "Riccati solution")
    return P, gain


def are_residual(prob, lam, P):
    """Norm of the Riccati equation residual at P (diagnostic)."""
    wp = weighted_penalty(prob, lam)
    A, B = prob.A, prob.B
    BtP = B.T @ P
    BtPA = BtP @ A
    F = A.T @ P @ A + wp.Q - BtPA.T @ np.linalg.solve(wp.R + BtP @ B, BtPA)
    return float(np.linalg.norm(F - P))


def lagrangian(prob, K, lam, tol=DEFAULT_TOL):
    """Lagrangian L(K, lam) = J_0(K) + sum lam_i (J_i(K) - c_i).

    Evaluated through the weighted-penalty form: the closed-loop value of
    (Q_lam, R_lam) minus lam . c, which needs a single Lyapunov solve and
    agrees with the sum-of-costs form to roundoff.
    """
    wp = weighted_penalty(prob, lam)
    g = _require_stabilizing(prob, K)
    Acl = prob.closed_loop(g.K)
    P = solve_dlyap(Acl, wp.Q + g.K.T @ wp.R @ g.K, tol)
    return float(np.trace(P @ prob.sigma0) - wp.lam @ prob.c)


def _policy_gradient_core(prob, wp, K, Acl, tol):
    """Gradient assembly for a pre-validated stabilizing closed loop."""
    P = _dlyap_doubling(Acl, wp.Q + K.T @ wp.R @ K, tol)
    Sigma = _dlyap_doubling(Acl.T, prob.sigma0, tol)
    BtP = prob.B.T @ P
    return 2.0 * ((wp.R + BtP @ prob.B) @ K - BtP @ prob.A) @ Sigma


def policy_gradient(prob, K, lam, tol=DEFAULT_TOL):
    """Exact gradient of the Lagrangian in K:

        grad = 2 [(R_lam + B^T P B) K - B^T P A] Sigma_K,

    with P the closed-loop value of (Q_lam, R_lam) and Sigma_K the
    closed-loop state correlation.  Validated against finite differences
    in the test suite.
    """
    wp = weighted_penalty(prob, lam)
    g = _require_stabilizing(prob, K)
    Acl = prob.closed_loop(g.K)
    grad = _policy_gradient_core(prob, wp, g.K, Acl, tol)
    return matcore.ensure_finite(grad, "policy gradient")
