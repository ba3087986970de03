"""Legendre-Gauss-Lobatto nodes, quadrature weights and collocation derivative."""

from __future__ import annotations

import numpy as np


class NewtonNonConvergence(RuntimeError):
    pass


def legendre_pair(n: int, x: np.ndarray):
    """P_n(x) and P_{n-1}(x) by the three-term recurrence."""
    p_prev, p = np.ones_like(x), x.copy()
    if n == 0:
        return p_prev, np.zeros_like(x)
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    return p, p_prev


def lgl_nodes(n: int, tol: float = 1e-14, max_iter: int = 100):
    """Nodes (ascending), weights and differentiation matrix for polynomial order n.

    Nodes are the roots of (1 - x^2) P_n'(x), found by Newton iteration started
    from the Chebyshev-Gauss-Lobatto points.
    """
    if n < 1:
        raise ValueError("polynomial order must be >= 1")
    x = -np.cos(np.pi * np.arange(n + 1) / n)
    for _ in range(max_iter):
        p, pm = legendre_pair(n, x)
        # Newton step on x P_n - P_{n-1}, whose roots are the LGL nodes
        dx = (x * p - pm) / ((n + 1) * p)
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    else:
        raise NewtonNonConvergence(f"LGL Newton iteration did not converge for n={n}")
    x[0], x[-1] = -1.0, 1.0
    p, _ = legendre_pair(n, x)
    w = 2.0 / (n * (n + 1) * p ** 2)
    return x, w, differentiation_matrix(x)


def differentiation_matrix(x: np.ndarray) -> np.ndarray:
    """Lagrange collocation derivative via barycentric weights; rows sum to zero."""
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / diff.prod(axis=1)
    D = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def legendre_vandermonde(x: np.ndarray, n: int) -> np.ndarray:
    return np.polynomial.legendre.legvander(x, n)
