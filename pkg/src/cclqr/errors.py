"""Exception types shared across the package.

Every failure mode a caller may want to branch on gets its own class, so
solver code never smuggles +inf or NaN through a return value.
"""


class CcLqrError(Exception):
    """Base class for all package errors."""


class DimensionError(CcLqrError, ValueError):
    """Input has the wrong shape (non-square, mismatched, or asymmetric)."""


class DomainError(CcLqrError, ValueError):
    """Input value outside the operation's domain (negative multiplier,
    non-finite entries, violated problem assumption)."""


class InstabilityError(CcLqrError):
    """A gain or closed-loop matrix is not stabilizing where it must be."""


class ConvergenceError(CcLqrError):
    """An iterative solver exhausted its budget without meeting tolerance."""


class StepsizeError(CcLqrError):
    """A gradient iterate left the stabilizing set (stepsize too large)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class StepsizeConditionError(CcLqrError, ValueError):
    """Dual stepsize violates the smoothness condition eta <= 2/mu."""


class InconsistentReferenceError(CcLqrError, ValueError):
    """A reference optimum lies below a recorded dual value."""


class InfeasibleError(CcLqrError):
    """The multiplier grid search found no feasible point.

    ``slater_point`` distinguishes "grid too coarse" (a strictly feasible
    gain exists, so the program is feasible) from genuine infeasibility.
    """

    def __init__(self, message, slater_point=None):
        super().__init__(message)
        self.slater_point = slater_point


class CertificationError(CcLqrError):
    """A numerical probe contradicted the property it certifies."""


class ConfigError(CcLqrError, ValueError):
    """A run configuration failed to parse or validate."""


class SolverAbort(CcLqrError):
    """Primal-dual loop aborted; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
