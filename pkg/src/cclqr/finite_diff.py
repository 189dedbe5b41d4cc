"""Central finite-difference checks for the analytic gradients.

Used by the grad-check experiment; the test suite carries its own
independent oracle implementations.
"""

import numpy as np

from . import lqr
from .primal_dual import dual_value

# Lagrangian evaluations inside difference quotients run the Lyapunov
# solver essentially to machine precision so the quotient noise stays
# well below the gradient tolerance.
FD_EVAL_TOL = 1e-15


def fd_policy_gradient(prob, K, lam, step=1e-6):
    """Entrywise central differences of the Lagrangian in K."""
    K = np.asarray(K, dtype=float)
    grad = np.zeros_like(K)
    for r in range(K.shape[0]):
        for c in range(K.shape[1]):
            Kp, Km = K.copy(), K.copy()
            Kp[r, c] += step
            Km[r, c] -= step
            fp = lqr.lagrangian(prob, Kp, lam, tol=FD_EVAL_TOL)
            fm = lqr.lagrangian(prob, Km, lam, tol=FD_EVAL_TOL)
            grad[r, c] = (fp - fm) / (2.0 * step)
    return grad


def fd_dual_gradient(prob, lam, step=1e-5):
    """Central differences of the dual function, step scaled per coordinate."""
    lam = np.asarray(lam, dtype=float)
    g = np.zeros(len(lam))
    for i in range(len(lam)):
        h = step * (1.0 + abs(lam[i]))
        lp, lm = lam.copy(), lam.copy()
        lp[i] += h
        lm[i] -= h
        if lm[i] < 0:
            raise ValueError("finite-difference step leaves the nonnegative orthant")
        g[i] = (dual_value(prob, lp) - dual_value(prob, lm)) / (2.0 * h)
    return g


def rel_err(a, b):
    """Norm-wise relative difference of two arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / scale)
