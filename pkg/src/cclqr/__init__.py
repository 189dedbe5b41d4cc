"""Solver toolkit for the cost-constrained LQR.

A policy-gradient primal-dual solver, a numerical duality lab (KKT /
strong-duality / smoothness certification), and a benchmark CLI that
reproduces the double-integrator experiment.
"""

from .errors import (
    CcLqrError,
    CertificationError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    DomainError,
    InconsistentReferenceError,
    InfeasibleError,
    InstabilityError,
    SolverAbort,
    StepsizeConditionError,
    StepsizeError,
)
from .matcore import is_pd, is_psd, spectral_radius, sym_part
from .lqr import (
    CcLqrProblem,
    Gain,
    WeightedPenalty,
    are_residual,
    cost,
    cost_matrix,
    costs,
    is_stabilizing,
    lagrangian,
    policy_gradient,
    solve_are,
    solve_dlyap,
    solve_dsigma,
    weighted_penalty,
)
from .primal_dual import (
    IterationRecord,
    OmegaBox,
    SolveTrace,
    SolverConfig,
    dual_ascent_exact,
    dual_ascent_step,
    dual_gradient_approx,
    dual_gradient_exact,
    dual_value,
    pg_minimize,
    regret,
    solve,
    theorem2_bound,
)
from .duality_lab import (
    DualityCertificate,
    SmoothnessProbe,
    concavity_probe,
    continuity_probe,
    estimate_bias_slope,
    kkt_check,
    monotonicity_probe,
    multiplier_program_grid,
    slater_check,
    smoothness_probe,
    z_sweep,
)
from .config import RunConfig, load_config, save_config, sec5_config_path

__version__ = "0.1.0"
