"""Independent oracles the solver implementations are checked against.

Everything here deliberately avoids the package's solver paths: Lyapunov
values come from brute-force series summation, the scalar Riccati solution
from its quadratic root, costs from Monte-Carlo rollouts, and gradients
from difference quotients built on those primitives.
"""

import numpy as np


def series_dlyap(Acl, M, tail_tol=1e-12, max_terms=200_000):
    """Brute-force P = sum_t (Acl^t)^T M Acl^t, summed until the term norm
    stays below tail_tol for a stretch of consecutive terms."""
    Acl = np.asarray(Acl, dtype=float)
    M = np.asarray(M, dtype=float)
    P = np.zeros_like(M)
    T = np.eye(Acl.shape[0])
    quiet = 0
    for _ in range(max_terms):
        term = T.T @ M @ T
        P = P + term
        if np.linalg.norm(term) < tail_tol * max(1.0, np.linalg.norm(P)):
            quiet += 1
            if quiet > 25:
                return (P + P.T) / 2.0
        else:
            quiet = 0
        T = Acl @ T
    raise RuntimeError("series oracle did not converge")


def series_dsigma(Acl, sigma0, tail_tol=1e-12):
    return series_dlyap(np.asarray(Acl).T, sigma0, tail_tol)


def scalar_are_root(a, b, q, r):
    """Positive root of the scalar Riccati equation
    b^2 p^2 + (r - q b^2 - a^2 r) p - q r = 0, plus the gain k = b p a / (r + b^2 p)."""
    A = b * b
    B = r - q * b * b - a * a * r
    C = -q * r
    p = (-B + np.sqrt(B * B - 4 * A * C)) / (2 * A)
    k = b * p * a / (r + b * b * p)
    return p, k


def mc_cost(A, B, K, Q, R, sigma0_chol, n_rollouts, horizon, rng):
    """Monte-Carlo estimate of E[sum_t x^T Q x + u^T R u] under u = -K x.

    Rollouts are vectorized: the state matrix X holds one trajectory per
    column.
    """
    n = A.shape[0]
    Acl = A - B @ K
    X = sigma0_chol @ rng.standard_normal((n, n_rollouts))
    total = np.zeros(n_rollouts)
    for _ in range(horizon):
        U = K @ X
        total += np.einsum("ij,ij->j", X, Q @ X) + np.einsum("ij,ij->j", U, R @ U)
        X = Acl @ X
    return float(np.mean(total))


def fd_grad_matrix(f, K, step=1e-6):
    """Entrywise central differences of a scalar function of a matrix."""
    K = np.asarray(K, dtype=float)
    g = np.zeros_like(K)
    for r in range(K.shape[0]):
        for c in range(K.shape[1]):
            Kp, Km = K.copy(), K.copy()
            Kp[r, c] += step
            Km[r, c] -= step
            g[r, c] = (f(Kp) - f(Km)) / (2.0 * step)
    return g


def fd_grad_vector(f, x, steps):
    """Central differences of a scalar function of a vector, per-coordinate
    step sizes."""
    x = np.asarray(x, dtype=float)
    g = np.zeros(len(x))
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += steps[i]
        xm[i] -= steps[i]
        g[i] = (f(xp) - f(xm)) / (2.0 * steps[i])
    return g


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300))


def random_stable_matrix(rng, n, rho_max=0.95):
    """Random matrix rescaled to a spectral radius uniform in (0.1, rho_max)."""
    A = rng.standard_normal((n, n))
    rho = np.max(np.abs(np.linalg.eigvals(A)))
    target = rng.uniform(0.1, rho_max)
    return A * (target / rho)


def random_psd(rng, n, scale=1.0):
    G = rng.standard_normal((n, n))
    return scale * (G.T @ G) / n


def random_problem(rng, n_max=4, m_max=2, n_constraints_max=3, pd_constraints=False):
    """Random controllable instance satisfying the model assumptions.

    Retries until the controllability check passes (generic matrices almost
    always do).
    """
    from cclqr import CcLqrProblem
    from cclqr.errors import DomainError

    while True:
        n = int(rng.integers(2, n_max + 1))
        m = int(rng.integers(1, min(m_max, n) + 1))
        N = int(rng.integers(0, n_constraints_max + 1))
        A = rng.standard_normal((n, n))
        A *= rng.uniform(0.3, 1.1) / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-9)
        B = rng.standard_normal((n, m))
        Q = [random_psd(rng, n) + 0.5 * np.eye(n)]
        R = [random_psd(rng, m) + 0.5 * np.eye(m)]
        for _ in range(N):
            if pd_constraints:
                Q.append(random_psd(rng, n) + 0.2 * np.eye(n))
                R.append(random_psd(rng, m) + 0.2 * np.eye(m))
            else:
                Q.append(random_psd(rng, n) if rng.random() < 0.8 else np.zeros((n, n)))
                R.append(random_psd(rng, m) if rng.random() < 0.8 else np.zeros((m, m)))
        c = rng.uniform(1.0, 20.0, N)
        try:
            return CcLqrProblem(A=A, B=B, Q=Q, R=R, c=c)
        except DomainError:
            continue
