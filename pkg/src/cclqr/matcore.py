"""Dense small-matrix kernels the rest of the package builds on.

Everything here targets matrices of size ~20x20 and below, stored as
row-major (C-order) float64 numpy arrays.  All public operations validate
finiteness on the way in and on the way out: divergence elsewhere in the
package must surface as a typed error, never as NaN arithmetic.
"""

import numpy as np

from .errors import DimensionError, DomainError

# Relative symmetry tolerance; fixed-point iterates accumulate roundoff of
# roughly this order before symmetrization.
SYM_RTOL = 1e-9


def as_matrix(m, name="matrix"):
    """Coerce to a float64 2-D array and reject non-finite entries."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.size == 0:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite entries")
    return a


def as_vector(v, name="vector"):
    """Coerce to a float64 1-D array; empty vectors are allowed."""
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite entries")
    return a


def as_square(m, name="matrix"):
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def ensure_finite(a, name="result"):
    """Post-condition guard: fail fast if a solver produced NaN/Inf."""
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite entries")
    return a


def spectral_radius(m):
    """Largest absolute eigenvalue of a square matrix.

    Uses the dense QR eigenvalue solver; closed-loop matrices routinely
    carry complex-conjugate dominant pairs, so power iteration would not do.
    """
    a = as_square(m)
    rho = float(np.max(np.abs(np.linalg.eigvals(a))))
    ensure_finite(rho, "spectral radius")
    return rho


def sym_part(m):
    """Symmetric part (m + m^T)/2.  Idempotent."""
    a = as_square(m)
    return (a + a.T) / 2.0


def check_symmetric(m, rtol=SYM_RTOL, name="matrix"):
    """Raise unless m is symmetric within rtol * ||m||; return sym_part(m)."""
    a = as_square(m, name)
    skew = np.linalg.norm(a - a.T)
    if skew > rtol * max(1.0, np.linalg.norm(a)):
        raise DimensionError(f"{name} is asymmetric beyond tolerance ({skew:.3e})")
    return (a + a.T) / 2.0


def is_psd(m, tol=1e-10):
    """True iff the symmetric matrix m has min eigenvalue >= -tol."""
    a = check_symmetric(m)
    return bool(np.min(np.linalg.eigvalsh(a)) >= -tol)


def is_pd(m, tol=1e-10):
    """True iff the symmetric matrix m has min eigenvalue > tol."""
    a = check_symmetric(m)
    return bool(np.min(np.linalg.eigvalsh(a)) > tol)
