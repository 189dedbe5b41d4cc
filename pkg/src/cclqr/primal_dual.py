"""Policy-gradient primal-dual solver.

Alternates an inner PG descent on the Lagrangian (fixed multiplier) with a
projected ascent step on the multiplier, driven by the constraint costs of
the inner solution.  Also provides the exact-gradient dual ascent used to
compute the reference optimum D*, the running-average regret, and the
sublinear-plus-bias regret bound evaluated from empirically estimated
constants.
"""

from dataclasses import dataclass, field

import numpy as np

from . import lqr, matcore
from .errors import (
    CcLqrError,
    ConvergenceError,
    DomainError,
    DimensionError,
    InconsistentReferenceError,
    SolverAbort,
    StepsizeConditionError,
    StepsizeError,
)

PG_SAFETY_CAP = 1_000_000  # hard ceiling when a gradient tolerance governs


@dataclass(frozen=True)
class OmegaBox:
    """Coordinate box [lower, upper] the dual iterates are projected onto.

    lower is pinned at zero; upper defaults to 100 per coordinate.  The box
    is a configurable stand-in for any compact multiplier set containing an
    optimal multiplier.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = matcore.as_vector(self.lower, "lower")
        hi = matcore.as_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DimensionError("box bounds must have equal length")
        if np.any(lo < 0) or np.any(lo > hi):
            raise DomainError("box must satisfy 0 <= lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def default(cls, n_constraints, lambda_max=100.0):
        hi = np.full(n_constraints, float(lambda_max))
        return cls(lower=np.zeros(n_constraints), upper=hi)

    def project(self, lam):
        return np.clip(matcore.as_vector(lam, "lambda"), self.lower, self.upper)

    def contains(self, lam, atol=0.0):
        lam = matcore.as_vector(lam, "lambda")
        return bool(
            np.all(lam >= self.lower - atol) and np.all(lam <= self.upper + atol)
        )

    @property
    def radius(self):
        """max ||lam|| over the box (attained at the upper corner)."""
        return float(np.linalg.norm(self.upper))


@dataclass
class SolverConfig:
    """Primal-dual solver parameters.

    Exactly one of ``pg_steps`` (fixed inner budget) and ``pg_grad_tol``
    (inner stop on ||grad L||) must be set.
    """

    zeta: float
    eta: float
    dual_iters: int
    omega: OmegaBox
    pg_steps: int | None = None
    pg_grad_tol: float | None = None
    warm_start: bool = True

    def __post_init__(self):
        if self.zeta <= 0 or self.eta <= 0:
            raise DomainError("stepsizes zeta and eta must be positive")
        if self.dual_iters < 1:
            raise DomainError("dual_iters must be >= 1")
        if (self.pg_steps is None) == (self.pg_grad_tol is None):
            raise DomainError("exactly one of pg_steps / pg_grad_tol must be set")
        if self.pg_steps is not None and self.pg_steps < 1:
            raise DomainError("pg_steps must be >= 1")
        if self.pg_grad_tol is not None and self.pg_grad_tol <= 0:
            raise DomainError("pg_grad_tol must be positive")


@dataclass
class IterationRecord:
    """State logged at one dual iteration k = 1, 2, ..."""

    k: int
    lam: np.ndarray
    gain: lqr.Gain
    costs: np.ndarray       # [J_0(K^k), ..., J_N(K^k)]
    dual_value: float       # D(lam^k), via the Riccati solve
    subgradient: np.ndarray  # d^k = costs[1:] - c
    pg_steps_used: int
    eps: float              # ||K^k - K*_{lam^k}||_F


@dataclass
class SolveTrace:
    """Full record of a primal-dual run.

    ``epsilon_est`` is the largest observed inner solution error
    ||K^k - K*_{lam^k}||; ``D_star_ref`` the reference dual optimum used
    for regret curves.
    """

    records: list[IterationRecord] = field(default_factory=list)
    D_star_ref: float | None = None
    epsilon_est: float | None = None

    def __len__(self):
        return len(self.records)

    @property
    def lambdas(self):
        return np.array([r.lam for r in self.records])

    @property
    def dual_values(self):
        return np.array([r.dual_value for r in self.records])

    @property
    def cost_rows(self):
        return np.array([r.costs for r in self.records])

    @property
    def subgradient_norms(self):
        return np.array([float(np.linalg.norm(r.subgradient)) for r in self.records])

    @property
    def eps_values(self):
        return np.array([r.eps for r in self.records])


def dual_value(prob, lam, tol=lqr.DEFAULT_TOL, P0=None):
    """D(lam) = min_K L(K, lam) = Tr(P*_lam sigma0) - lam . c."""
    P, _ = lqr.solve_are(prob, lam, tol=tol, P0=P0)
    lam = matcore.as_vector(lam, "lambda")
    return float(np.trace(P @ prob.sigma0) - lam @ prob.c)


def pg_minimize(prob, lam, K_init, cfg):
    """Inner loop: gradient descent K+ = K - zeta * grad_K L(K, lam).

    Every iterate must stay stabilizing (checked each step); leaving the
    stabilizing set is a stepsize failure and is reported, never clamped.
    Returns the final gain and the number of gradient steps taken.
    """
    g = prob.gain(K_init)
    if not g.is_stabilizing:
        raise StepsizeError("pg_minimize requires a stabilizing initial gain", step=0)
    lam = matcore.as_vector(lam, "lambda")
    wp = lqr.weighted_penalty(prob, lam)

    budget = cfg.pg_steps if cfg.pg_steps is not None else PG_SAFETY_CAP
    K = g.K.copy()
    Acl = prob.A - prob.B @ K
    rho = g.rho
    steps = 0
    for step in range(budget):
        grad = lqr._policy_gradient_core(prob, wp, K, Acl, lqr.DEFAULT_TOL)
        if cfg.pg_grad_tol is not None and np.linalg.norm(grad) <= cfg.pg_grad_tol:
            break
        K = K - cfg.zeta * grad
        steps += 1
        Acl = prob.A - prob.B @ K
        rho = matcore.spectral_radius(Acl)
        if rho >= 1.0 - lqr.STABILITY_GUARD:
            raise StepsizeError(
                f"PG iterate left the stabilizing set at step {steps} "
                f"(rho={rho:.6g}); reduce zeta",
                step=steps,
            )
    else:
        if cfg.pg_grad_tol is not None:
            raise ConvergenceError(
                f"pg_minimize did not reach pg_grad_tol within {PG_SAFETY_CAP} steps"
            )
    matcore.ensure_finite(K, "pg_minimize iterate")
    return lqr.Gain(K=K, rho=rho), steps


def dual_gradient_exact(prob, lam, tol=lqr.DEFAULT_TOL):
    """Gradient of the dual function: [J_i(K*_lam) - c_i]_i, with K*_lam
    from the Riccati solve."""
    _, gain = lqr.solve_are(prob, lam, tol=tol)
    J = lqr.costs(prob, gain, tol=tol)
    return J[1:] - prob.c


def dual_gradient_approx(prob, K):
    """Approximate dual gradient d = [J_i(K) - c_i]_i at an inner-loop gain."""
    J = lqr.costs(prob, K)
    return J[1:] - prob.c


def dual_ascent_step(lam, d, eta, omega):
    """Projected ascent: clamp lam + eta * d into the box."""
    lam = matcore.as_vector(lam, "lambda")
    d = matcore.as_vector(d, "d")
    if lam.shape != d.shape:
        raise DimensionError("lambda and d must have equal length")
    if not omega.contains(lam):
        raise DomainError("lambda must lie in the box before the ascent step")
    return omega.project(lam + eta * d)


def solve(prob, cfg, K0, lambda0=None, d_star_ref=None):
    """Run the full primal-dual alternation and return its trace.

    Iteration k holds the multiplier lam^k (lam^1 is the initial one),
    the inner PG solution K^k at lam^k, all costs, the exact dual value
    D(lam^k), and the approximate dual gradient d^k that produces
    lam^{k+1} by a projected ascent step.  Inner-loop failures abort with
    the partial trace attached to the raised :class:`SolverAbort`.

    ``d_star_ref`` skips the built-in reference computation (useful when
    several runs share one problem).
    """
    N = prob.n_constraints
    lam = np.zeros(N) if lambda0 is None else matcore.as_vector(lambda0, "lambda0")
    if not cfg.omega.contains(lam):
        raise DomainError("lambda0 must lie inside the projection box")
    g = prob.gain(K0)
    if not g.is_stabilizing:
        raise DomainError("K0 must be stabilizing")

    trace = SolveTrace()
    K_prev = g.K
    try:
        for k in range(1, cfg.dual_iters + 1):
            start = K_prev if cfg.warm_start else g.K
            gain_k, steps = pg_minimize(prob, lam, start, cfg)
            J = lqr.costs(prob, gain_k)
            d = J[1:] - prob.c
            P_star, gain_star = lqr.solve_are(prob, lam)
            D_k = float(np.trace(P_star @ prob.sigma0) - lam @ prob.c)
            eps_k = float(np.linalg.norm(gain_k.K - gain_star.K))
            trace.records.append(
                IterationRecord(
                    k=k,
                    lam=lam.copy(),
                    gain=gain_k,
                    costs=J,
                    dual_value=D_k,
                    subgradient=d,
                    pg_steps_used=steps,
                    eps=eps_k,
                )
            )
            lam = dual_ascent_step(lam, d, cfg.eta, cfg.omega)
            K_prev = gain_k.K
    except CcLqrError as exc:
        raise SolverAbort(f"primal-dual loop aborted at iteration {len(trace) + 1}: {exc}",
                          trace=trace) from exc

    trace.epsilon_est = float(np.max(trace.eps_values)) if len(trace) else 0.0
    if d_star_ref is None and N > 0:
        _, d_star_ref = dual_ascent_exact(prob, cfg.omega, eta0=cfg.eta)
    elif d_star_ref is None:
        d_star_ref = trace.dual_values.max() if len(trace) else 0.0
    trace.D_star_ref = float(d_star_ref)
    return trace


def dual_ascent_exact(prob, omega, lambda0=None, eta0=0.5, tol=1e-10,
                      max_iters=50_000):
    """High-accuracy reference for the dual optimum.

    Monotone projected gradient ascent with exact dual gradients and step
    halving, run until the projected-gradient norm falls below ``tol``,
    then polished by a shrinking coordinate search.  Returns
    (lam_star, D_star).
    """
    N = prob.n_constraints
    lam = np.zeros(N) if lambda0 is None else omega.project(lambda0)
    if N == 0:
        return lam, dual_value(prob, lam)

    P0 = None

    def value_and_grad(point, P_warm):
        P, gain = lqr.solve_are(prob, point, P0=P_warm)
        J = lqr.costs(prob, gain)
        D = float(np.trace(P @ prob.sigma0) - point @ prob.c)
        return D, J[1:] - prob.c, P

    D, grad, P0 = value_and_grad(lam, P0)
    eta = eta0
    for _ in range(max_iters):
        cand = omega.project(lam + eta * grad)
        pg = (cand - lam) / eta
        if np.linalg.norm(pg) <= tol:
            break
        D_cand, grad_cand, P0 = value_and_grad(cand, P0)
        if D_cand >= D - 1e-13 * (1.0 + abs(D)):
            lam, D, grad = cand, D_cand, grad_cand
            eta = min(eta * 1.5, eta0 * 16.0)
        else:
            eta *= 0.5
            if eta < 1e-14:
                break

    # Coordinate polish: pattern search with shrinking steps.
    step = 1e-3
    sweeps = 0
    while step >= 1e-10 and sweeps < 400:
        sweeps += 1
        improved = False
        for i in range(N):
            for direction in (+1.0, -1.0):
                cand = lam.copy()
                cand[i] += direction * step
                cand = omega.project(cand)
                if np.array_equal(cand, lam):
                    continue
                D_cand = dual_value(prob, cand, P0=P0)
                if D_cand > D:
                    lam, D = cand, D_cand
                    improved = True
        if not improved:
            step *= 0.25
    return lam, D


def regret(trace, D_star):
    """Running-average regret (1/k) sum_{j<=k} (D_star - D(lam^j)).

    ``D_star`` must dominate every recorded dual value up to 1e-9 slack;
    the output is clipped to be nonnegative within that slack.
    """
    if len(trace) < 1:
        raise DomainError("trace must hold at least one dual iteration")
    D = trace.dual_values
    worst = float(np.max(D))
    if D_star < worst - 1e-9:
        raise InconsistentReferenceError(
            f"D_star={D_star:.12g} is below a recorded dual value {worst:.12g}"
        )
    diffs = D_star - D
    out = np.cumsum(diffs) / np.arange(1, len(D) + 1)
    return np.maximum(out, 0.0)


def theorem2_bound(trace, mu_hat, c_hat, dbar_hat, omega_norm, eta, eps):
    """Regret bound sqrt(p2 D*)/sqrt(k) + sqrt(p1 p2) per iteration.

    p1 = eta*c*eps*(1 - mu*eta/2)*(eta*c*eps + 2*dbar) + c*eps*omega and
    p2 = (1 - mu*eta/2)*omega^2/eta^2, evaluated from empirically
    estimated constants; used to compare bound against measured regret,
    not as a proof.
    """
    for name, v in (("mu_hat", mu_hat), ("c_hat", c_hat),
                    ("dbar_hat", dbar_hat), ("omega_norm", omega_norm),
                    ("eps", eps)):
        if v < 0:
            raise DomainError(f"{name} must be nonnegative")
    if eta <= 0:
        raise DomainError("eta must be positive")
    if mu_hat > 0 and eta > 2.0 / mu_hat:
        raise StepsizeConditionError(
            f"eta={eta:.6g} violates eta <= 2/mu_hat = {2.0 / mu_hat:.6g}"
        )
    if trace.D_star_ref is None:
        raise DomainError("trace carries no D_star_ref")
    if len(trace) < 1:
        raise DomainError("trace must hold at least one dual iteration")

    shrink = 1.0 - mu_hat * eta / 2.0
    p1 = eta * c_hat * eps * shrink * (eta * c_hat * eps + 2.0 * dbar_hat) \
        + c_hat * eps * omega_norm
    p2 = shrink * omega_norm ** 2 / eta ** 2
    D_star = max(trace.D_star_ref, 0.0)
    k = np.arange(1, len(trace) + 1, dtype=float)
    return np.sqrt(p2 * D_star) / np.sqrt(k) + np.sqrt(p1 * p2)
