"""Numerical certification of the duality theory.

The lab turns the theory into measurements: a brute-force grid oracle for
the constructive multiplier program, KKT residuals and duality-gap
certificates, a Slater-point search, the multiplier-set sweep over the
program's weight vector, and monotonicity / continuity / smoothness /
concavity probes for the dual function.

Grid search is exhaustive on purpose: at desk scale (N <= 4) it is the
honest oracle for a program that is otherwise intractable.
"""

from dataclasses import dataclass

import numpy as np

from . import lqr, matcore
from .errors import (
    CertificationError,
    ConvergenceError,
    DomainError,
    InfeasibleError,
)
from .primal_dual import (
    dual_gradient_approx,
    dual_gradient_exact,
    dual_value,
)

# Feasibility comparisons at solver tolerance: strict inequalities are
# unreliable, so grid feasibility allows this relative slack.
FEAS_RTOL = 1e-9

# Refinement boxes zoom by GRID_ZOOM but never drop below GRID_BRACKET
# cells of the previous grid: pure geometric zoom leaves the incumbent's
# complementary slackness above certification tolerance on wedge-shaped
# feasible sets, while a bare cell bracket aliases along thin wedges.
GRID_ZOOM = 10.0
GRID_BRACKET = 4.0
MAX_GRID_CONSTRAINTS = 4


@dataclass
class DualityCertificate:
    """Numerical residuals for the saddle-point optimality conditions.

    A passing certificate has the duality gap, every slackness residual,
    and the stationarity norm below their tolerances, and no feasibility
    margin below -tol * c_i.
    """

    lambda_star: np.ndarray
    K_star: lqr.Gain
    duality_gap_rel: float
    slackness_residuals: np.ndarray
    feasibility_margins: np.ndarray
    stationarity_norm: float
    primal_value: float
    dual_value: float
    limits: np.ndarray
    tol: float
    slater_point: lqr.Gain | None = None

    @property
    def stationarity_ok(self):
        return self.stationarity_norm <= self.tol

    @property
    def feasibility_ok(self):
        return bool(np.all(self.feasibility_margins >= -self.tol * self.limits))

    @property
    def slackness_ok(self):
        return bool(np.all(self.slackness_residuals <= self.tol * self.limits))

    @property
    def gap_ok(self):
        return self.duality_gap_rel <= self.tol

    @property
    def passed(self):
        return (self.stationarity_ok and self.feasibility_ok
                and self.slackness_ok and self.gap_ok)


@dataclass
class SmoothnessProbe:
    """Empirical gradient-Lipschitz measurement over a multiplier box.

    ``mu_hat`` is the largest observed ratio
    ||grad D(lam') - grad D(lam)|| / ||lam' - lam|| for pairs closer than
    the probe radius.
    """

    grid: list
    ratios: np.ndarray
    mu_hat: float
    radius: float


def _default_slater_candidates(prob):
    """Gains K*_lam for lam on two coarse rays: the all-ones direction and
    the ray through the (ascent-computed) dual optimum.

    Strictly feasible gains live inside the feasible wedge of the
    multiplier program; that wedge can be narrow, but it opens outward
    along the ray through an optimal multiplier, so anchoring the search
    there finds a Slater point whenever the constraint weighting admits
    one at all.
    """
    from .primal_dual import OmegaBox, dual_ascent_exact

    ray_values = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
    rays = [np.ones(prob.n_constraints)]
    lam_hat, _ = dual_ascent_exact(prob, OmegaBox.default(prob.n_constraints))
    if np.linalg.norm(lam_hat) > 0:
        rays.append(lam_hat / np.linalg.norm(lam_hat))
        ray_values = ray_values + [float(np.linalg.norm(lam_hat)) * t
                                   for t in (1.02, 1.05, 1.1, 1.25, 1.5, 2.0)]
    gains = []
    for ray in rays:
        for t in ray_values:
            _, gain = lqr.solve_are(prob, t * ray)
            gains.append(gain)
    return gains


def slater_check(prob, candidates=None):
    """First candidate gain with J_i < c_i strictly for all i, else None.

    The default candidate list sweeps K*_lam along coarse multiplier rays
    (see :func:`_default_slater_candidates`).
    """
    if candidates is None:
        candidates = _default_slater_candidates(prob)
    if not candidates:
        raise DomainError("candidate list must be nonempty")
    for K in candidates:
        gain = prob.gain(K)
        if not gain.is_stabilizing:
            continue
        J = lqr.costs(prob, gain)
        if np.all(J[1:] < prob.c):
            return gain
    return None


def _grid_axes(center, half_width, omega, grid_res):
    axes = []
    for i in range(len(center)):
        lo = max(omega.lower[i], center[i] - half_width[i])
        hi = min(omega.upper[i], center[i] + half_width[i])
        axes.append(np.linspace(lo, hi, grid_res))
    return axes


def multiplier_program_grid(prob, z, grid_res, omega, refinements=2):
    """Grid oracle for the constructive multiplier program:

        minimize z . lam  s.t.  J_i(K*_lam) <= c_i for all i,

    searched exhaustively over the box, then refined ``refinements`` times
    on a shrunk box bracketing the incumbent's grid cell.  Ties in the
    objective break toward the lexicographically smallest multiplier.
    """
    z = matcore.as_vector(z, "z")
    N = prob.n_constraints
    if len(z) != N:
        raise DomainError(f"z must have length {N}")
    if np.any(z <= 0):
        raise DomainError("z must be strictly positive componentwise")
    if grid_res < 2:
        raise DomainError("grid_res must be >= 2")
    if N == 0:
        return np.zeros(0)
    if N > MAX_GRID_CONSTRAINTS:
        raise DomainError(
            f"grid search supports at most {MAX_GRID_CONSTRAINTS} constraints"
        )

    center = (omega.lower + omega.upper) / 2.0
    half_width = (omega.upper - omega.lower) / 2.0
    feas_limit = prob.c * (1.0 + FEAS_RTOL)

    incumbent = None
    best = np.inf
    for _ in range(refinements + 1):
        axes = _grid_axes(center, half_width, omega, grid_res)
        spacing = np.array([ax[1] - ax[0] if len(ax) > 1 else 0.0 for ax in axes])
        P_warm = None
        # Lexicographic iteration order + strict improvement keeps the
        # first (lexicographically smallest) among objective ties.
        for idx in np.ndindex(*(len(ax) for ax in axes)):
            lam = np.array([axes[i][j] for i, j in enumerate(idx)])
            try:
                P_warm, gain = lqr.solve_are(prob, lam, P0=P_warm)
            except ConvergenceError:
                continue
            J = lqr.costs(prob, gain)
            if np.all(J[1:] <= feas_limit):
                val = float(z @ lam)
                if val < best:
                    best = val
                    incumbent = lam
        if incumbent is None:
            break
        center = incumbent
        half_width = np.maximum(half_width / GRID_ZOOM, GRID_BRACKET * spacing)

    if incumbent is None:
        slater = slater_check(prob)
        if slater is not None:
            raise InfeasibleError(
                "no feasible grid point found although a Slater point exists; "
                "the grid is too coarse",
                slater_point=slater,
            )
        raise InfeasibleError(
            "no feasible grid point and no Slater certificate; "
            "the problem may be infeasible"
        )
    return incumbent


def kkt_check(prob, K, lam, tol=1e-2):
    """Evaluate the saddle-point optimality conditions at (K, lam).

    Stationarity is measured by ||grad_K L(K, lam)|| (sufficient for the
    unique Lagrangian minimizer), feasibility by the margins c_i - J_i(K),
    complementary slackness by |lam_i (J_i(K) - c_i)|, and the duality gap
    by |J_0(K) - D(lam)| / max(1, D(lam)).  The certificate records every
    residual; nothing is raised on failure.
    """
    lam = matcore.as_vector(lam, "lambda")
    if np.any(lam < 0):
        raise DomainError("multiplier entries must be nonnegative")
    gain = prob.gain(K)
    J = lqr.costs(prob, gain)
    grad = lqr.policy_gradient(prob, gain, lam)
    D = dual_value(prob, lam)
    gap = abs(J[0] - D) / max(1.0, D)
    return DualityCertificate(
        lambda_star=lam,
        K_star=gain,
        duality_gap_rel=float(gap),
        slackness_residuals=np.abs(lam * (J[1:] - prob.c)),
        feasibility_margins=prob.c - J[1:],
        stationarity_norm=float(np.linalg.norm(grad)),
        primal_value=float(J[0]),
        dual_value=float(D),
        tol=tol,
        limits=prob.c.copy(),
    )


def z_sweep(prob, z_list, grid_res, omega, refinements=2):
    """Run the multiplier program for several weight vectors.

    Distinct z may pick distinct optimal multipliers, but all of them must
    share the optimal value; callers verify via :func:`kkt_check` that the
    duality gap vanishes for each.
    """
    out = []
    for z in z_list:
        lam_star = multiplier_program_grid(prob, z, grid_res, omega,
                                           refinements=refinements)
        out.append((matcore.as_vector(z, "z"), lam_star))
    return out


def monotonicity_probe(prob, lambda_base, j, values, tol=1e-8):
    """J_j(K*_lam) as lam_j sweeps ``values`` (others fixed).

    Raises :class:`CertificationError` if the sequence increases beyond
    tol * (1 + |J|); returns the sweep values otherwise.
    """
    lam = matcore.as_vector(lambda_base, "lambda_base").copy()
    if not 1 <= j <= prob.n_constraints:
        raise DomainError(f"constraint index {j} out of range 1..{prob.n_constraints}")
    values = matcore.as_vector(values, "values")
    if np.any(np.diff(values) <= 0):
        raise DomainError("values must be strictly increasing")
    if np.any(values < 0):
        raise DomainError("values must be nonnegative")

    out = []
    P_warm = None
    for v in values:
        lam[j - 1] = v
        P_warm, gain = lqr.solve_are(prob, lam, P0=P_warm)
        out.append(lqr.cost(prob, gain, j))
    for a, b in zip(out, out[1:]):
        if b > a + tol * (1.0 + abs(a)):
            raise CertificationError(
                f"J_{j}(K*_lam) increased along the lambda_{j} sweep: "
                f"{a:.12g} -> {b:.12g}"
            )
    return out


def continuity_probe(prob, lam, radii, n_dirs=8, seed=0, final_tol=1e-6):
    """max_direction ||K*_{lam+delta} - K*_lam|| per perturbation radius.

    Directions are unit vectors sampled once (seeded) and reused across
    radii; perturbed multipliers are clipped at zero.  When the last
    radius is at the 1e-8 * (1 + ||lam||) scale the final value must fall
    below ``final_tol``.
    """
    lam = matcore.as_vector(lam, "lambda")
    if len(lam) == 0:
        raise DomainError("continuity probe needs at least one constraint")
    radii = matcore.as_vector(radii, "radii")
    if np.any(radii < 0):
        raise DomainError("radii must be nonnegative")
    if np.any(np.diff(radii) >= 0):
        raise DomainError("radii must be strictly decreasing")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_dirs, len(lam)))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    _, gain0 = lqr.solve_are(prob, lam)
    out = []
    for r in radii:
        worst = 0.0
        for u in dirs:
            pert = np.maximum(lam + r * u, 0.0)
            _, gain = lqr.solve_are(prob, pert)
            worst = max(worst, float(np.linalg.norm(gain.K - gain0.K)))
        out.append(worst)

    scale = 1e-8 * (1.0 + np.linalg.norm(lam))
    if radii[-1] <= scale and out[-1] > final_tol:
        raise CertificationError(
            f"K*_lam failed the continuity probe: difference {out[-1]:.3e} at "
            f"radius {radii[-1]:.3e}"
        )
    return out


def smoothness_probe(prob, omega, n_pairs, radius, seed=0):
    """Sample gradient-difference ratios over the box and report the max.

    Pairs (lam, lam') with ||lam' - lam|| <= radius are drawn uniformly
    (seeded); each contributes ||grad D(lam') - grad D(lam)|| / distance.
    """
    if radius <= 0:
        raise DomainError("radius must be positive")
    if n_pairs < 10:
        raise DomainError("n_pairs must be >= 10")
    N = prob.n_constraints
    if N == 0:
        raise DomainError("smoothness probe needs at least one constraint")

    rng = np.random.default_rng(seed)
    grid = []
    ratios = []
    draws = 0
    while len(ratios) < n_pairs:
        draws += 1
        if draws > 50 * n_pairs:
            raise DomainError("smoothness probe failed to draw distinct pairs")
        lam = omega.lower + rng.random(N) * (omega.upper - omega.lower)
        u = rng.standard_normal(N)
        u /= np.linalg.norm(u)
        pert = np.clip(lam + radius * u, omega.lower, omega.upper)
        dist = float(np.linalg.norm(pert - lam))
        if dist == 0.0 or dist > radius * (1.0 + 1e-12):
            continue
        g0 = dual_gradient_exact(prob, lam)
        g1 = dual_gradient_exact(prob, pert)
        ratios.append(float(np.linalg.norm(g1 - g0)) / dist)
        grid.append(lam)
    ratios = np.array(ratios)
    matcore.ensure_finite(ratios, "smoothness ratios")
    return SmoothnessProbe(grid=grid, ratios=ratios,
                           mu_hat=float(np.max(ratios)), radius=radius)


def concavity_probe(prob, omega, n_triples, seed=0, tol=lqr.DEFAULT_TOL):
    """Chord slack D(t a + (1-t) b) - [t D(a) + (1-t) D(b)] on random triples.

    Concavity of the dual function means every slack is nonnegative up to
    solver noise; the caller asserts against its slack budget.
    """
    N = prob.n_constraints
    if N == 0:
        raise DomainError("concavity probe needs at least one constraint")
    rng = np.random.default_rng(seed)
    slacks = []
    for _ in range(n_triples):
        a = omega.lower + rng.random(N) * (omega.upper - omega.lower)
        b = omega.lower + rng.random(N) * (omega.upper - omega.lower)
        t = rng.random()
        mid = t * a + (1.0 - t) * b
        Da = dual_value(prob, a, tol=tol)
        Db = dual_value(prob, b, tol=tol)
        Dm = dual_value(prob, mid, tol=tol)
        slacks.append(Dm - (t * Da + (1.0 - t) * Db))
    return np.array(slacks)


def estimate_bias_slope(prob, lam, radii=None, n_dirs=6, seed=0):
    """Empirical constant c_hat with ||d(K) - grad D(lam)|| <= c_hat ||K - K*||.

    Samples gains on shrinking spheres around K*_lam and returns the
    largest observed ratio (an upper slope estimate for the approximate
    dual gradient's bias).
    """
    if radii is None:
        radii = [1e-2, 1e-3, 1e-4]
    lam = matcore.as_vector(lam, "lambda")
    _, gain_star = lqr.solve_are(prob, lam)
    grad_exact = dual_gradient_exact(prob, lam)
    rng = np.random.default_rng(seed)

    c_hat = 0.0
    for r in radii:
        for _ in range(n_dirs):
            U = rng.standard_normal(gain_star.K.shape)
            U /= np.linalg.norm(U)
            K = gain_star.K + r * U
            gain = prob.gain(K)
            if not gain.is_stabilizing:
                continue
            d = dual_gradient_approx(prob, gain)
            c_hat = max(c_hat, float(np.linalg.norm(d - grad_exact)) / r)
    if c_hat == 0.0:
        raise CertificationError("bias-slope probe found no stabilizing sample")
    return c_hat
