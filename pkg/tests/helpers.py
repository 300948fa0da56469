"""Finite-difference oracles used to check analytic derivatives.

These stay independent of the code under test: plain central differences
of the callables, nothing shared with the analytic formulas.
"""

import numpy as np


def fd_gradient(f, x, h=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        hi = h * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = hi
        g[i] = (f(x + e) - f(x - e)) / (2.0 * hi)
    return g


def fd_jacobian(grad, x, h=1e-6):
    """Central-difference Jacobian of a vector function (symmetrized)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    jac = np.zeros((n, n))
    for i in range(n):
        hi = h * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = hi
        jac[:, i] = (grad(x + e) - grad(x - e)) / (2.0 * hi)
    return 0.5 * (jac + jac.T)


def rel_err(approx, exact):
    """Norm of the difference relative to the norm of the exact value."""
    exact = np.asarray(exact, dtype=float)
    scale = max(np.linalg.norm(exact), 1e-30)
    return np.linalg.norm(np.asarray(approx, dtype=float) - exact) / scale
