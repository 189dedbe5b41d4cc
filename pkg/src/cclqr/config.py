"""Run configuration: JSON schema, validation, and round-trip serialization.

Matrices are row-major nested arrays.  Loading constructs the problem
container, so every model assumption (definiteness, controllability,
positive limits) is enforced at the config boundary with an error naming
the violated invariant.
"""

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import matcore
from .errors import CcLqrError, ConfigError, DomainError
from .lqr import CcLqrProblem
from .primal_dual import OmegaBox, SolverConfig

EXPERIMENTS = ("solve", "verify", "reproduce-sec5", "grad-check", "probes")

VERIFY_DEFAULTS = {"grid_res": 60, "refinements": 2, "kkt_tol": 1e-2}


@dataclass
class RunConfig:
    """One CLI run: problem + solver + experiment + reproducibility knobs."""

    experiment: str
    problem: CcLqrProblem
    K0: np.ndarray
    zeta: float
    eta: float
    dual_iters: int
    lambda_max: np.ndarray
    pg_steps: int | None = None
    pg_grad_tol: float | None = None
    warm_start: bool = True
    lambda0: np.ndarray | None = None
    seed: int = 0
    output_dir: str = "out"
    grid_res: int = VERIFY_DEFAULTS["grid_res"]
    refinements: int = VERIFY_DEFAULTS["refinements"]
    z: np.ndarray | None = None
    kkt_tol: float = VERIFY_DEFAULTS["kkt_tol"]

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose one of {EXPERIMENTS}"
            )
        N = self.problem.n_constraints
        self.K0 = matcore.as_matrix(self.K0, "K0")
        if self.K0.shape != (self.problem.m, self.problem.n):
            raise ConfigError(
                f"K0 must be {self.problem.m}x{self.problem.n}, got {self.K0.shape}"
            )
        self.lambda_max = matcore.as_vector(self.lambda_max, "lambda_max")
        if len(self.lambda_max) == 1 and N != 1:
            self.lambda_max = np.full(N, float(self.lambda_max[0]))
        if len(self.lambda_max) != N:
            raise ConfigError(f"lambda_max must have length {N}")
        if np.any(self.lambda_max <= 0) and N > 0:
            raise ConfigError("lambda_max entries must be positive")
        if self.lambda0 is None:
            self.lambda0 = np.zeros(N)
        self.lambda0 = matcore.as_vector(self.lambda0, "lambda0")
        if len(self.lambda0) != N:
            raise ConfigError(f"lambda0 must have length {N}")
        if self.z is None:
            self.z = np.ones(N)
        self.z = matcore.as_vector(self.z, "z")
        if len(self.z) != N:
            raise ConfigError(f"z must have length {N}")

    def omega(self):
        N = self.problem.n_constraints
        return OmegaBox(lower=np.zeros(N), upper=self.lambda_max.copy())

    def solver_config(self, pg_steps=None):
        """Build the SolverConfig; ``pg_steps`` overrides the inner budget."""
        steps = self.pg_steps if pg_steps is None else pg_steps
        tol = self.pg_grad_tol if pg_steps is None else None
        return SolverConfig(
            zeta=self.zeta,
            eta=self.eta,
            dual_iters=self.dual_iters,
            omega=self.omega(),
            pg_steps=steps,
            pg_grad_tol=tol,
            warm_start=self.warm_start,
        )

    def to_dict(self):
        p = self.problem
        doc = {
            "experiment": self.experiment,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "problem": {
                "A": p.A.tolist(),
                "B": p.B.tolist(),
                "Q": [Qi.tolist() for Qi in p.Q],
                "R": [Ri.tolist() for Ri in p.R],
                "c": p.c.tolist(),
                "sigma0": p.sigma0.tolist(),
            },
            "solver": {
                "zeta": self.zeta,
                "eta": self.eta,
                "dual_iters": self.dual_iters,
                "lambda_max": self.lambda_max.tolist(),
                "warm_start": self.warm_start,
                "K0": self.K0.tolist(),
                "lambda0": self.lambda0.tolist(),
            },
            "verify": {
                "grid_res": self.grid_res,
                "refinements": self.refinements,
                "z": self.z.tolist(),
                "kkt_tol": self.kkt_tol,
            },
        }
        if self.pg_steps is not None:
            doc["solver"]["pg_steps"] = self.pg_steps
        if self.pg_grad_tol is not None:
            doc["solver"]["pg_grad_tol"] = self.pg_grad_tol
        return doc

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _require(section, key, where):
    if key not in section:
        raise ConfigError(f"missing required field {key!r} in {where}")
    return section[key]


def from_dict(doc):
    """Validate a parsed JSON document into a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    experiment = _require(doc, "experiment", "config")
    prob_doc = _require(doc, "problem", "config")
    solver_doc = _require(doc, "solver", "config")
    verify_doc = doc.get("verify", {})

    try:
        problem = CcLqrProblem(
            A=_require(prob_doc, "A", "problem"),
            B=_require(prob_doc, "B", "problem"),
            Q=_require(prob_doc, "Q", "problem"),
            R=_require(prob_doc, "R", "problem"),
            c=prob_doc.get("c", []),
            sigma0=prob_doc.get("sigma0"),
        )
    except CcLqrError as exc:
        raise ConfigError(f"invalid problem: {exc}") from exc

    try:
        cfg = RunConfig(
            experiment=experiment,
            problem=problem,
            K0=_require(solver_doc, "K0", "solver"),
            zeta=float(_require(solver_doc, "zeta", "solver")),
            eta=float(_require(solver_doc, "eta", "solver")),
            dual_iters=int(_require(solver_doc, "dual_iters", "solver")),
            lambda_max=solver_doc.get("lambda_max", 100.0),
            pg_steps=(int(solver_doc["pg_steps"])
                      if "pg_steps" in solver_doc else None),
            pg_grad_tol=(float(solver_doc["pg_grad_tol"])
                         if "pg_grad_tol" in solver_doc else None),
            warm_start=bool(solver_doc.get("warm_start", True)),
            lambda0=solver_doc.get("lambda0"),
            seed=int(doc.get("seed", 0)),
            output_dir=str(doc.get("output_dir", "out")),
            grid_res=int(verify_doc.get("grid_res", VERIFY_DEFAULTS["grid_res"])),
            refinements=int(verify_doc.get("refinements",
                                           VERIFY_DEFAULTS["refinements"])),
            z=verify_doc.get("z"),
            kkt_tol=float(verify_doc.get("kkt_tol", VERIFY_DEFAULTS["kkt_tol"])),
        )
        # Exercise the SolverConfig invariants (exactly one stopping rule,
        # positive stepsizes) at load time rather than mid-run.
        cfg.solver_config()
    except (CcLqrError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid solver settings: {exc}") from exc
    return cfg


def load_config(path):
    """Load and fully validate a JSON run configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        return from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def save_config(cfg, path):
    """Write a config back out as canonical JSON (round-trips exactly)."""
    path = Path(path)
    path.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


def sec5_config_path():
    """Path of the bundled double-integrator experiment configuration."""
    return Path(str(resources.files("cclqr").joinpath("data", "sec5.json")))


def sec5_config(experiment="reproduce-sec5"):
    """Bundled double-integrator RunConfig (experiment field overridable)."""
    cfg = load_config(sec5_config_path())
    cfg.experiment = experiment
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    return cfg
