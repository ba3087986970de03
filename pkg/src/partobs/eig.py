"""Symmetric-definite generalized eigenproblems G xi = sigma S xi via Cholesky + cyclic Jacobi."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular


class DegenerateBasisError(np.linalg.LinAlgError):
    pass


class JacobiNonConvergence(RuntimeError):
    pass


def _off(A):
    return np.sqrt(2 * np.sum(np.triu(A, 1) ** 2))


def jacobi_eigh(A: np.ndarray, tol: float = 1e-13, max_sweeps: int = 60):
    """Cyclic Jacobi for a symmetric matrix; returns (eigvals ascending, eigvecs as columns)."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("square matrix expected")
    A = (A + A.T) / 2
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if n == 1 or scale == 0.0:
        return np.diag(A).copy(), V
    for _ in range(max_sweeps):
        if _off(A) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1 / np.hypot(1.0, t)
                s = t * c
                R = np.array([[c, s], [-s, c]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ R
                A[idx, :] = R.T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
                V[:, idx] = V[:, idx] @ R
    else:
        if _off(A) > tol * scale:
            raise JacobiNonConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def cholesky(S: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise DegenerateBasisError("degenerate estimation basis") from None
    if not np.all(np.isfinite(L)) or np.min(np.diag(L)) <= 0:
        raise DegenerateBasisError("degenerate estimation basis")
    # numpy accepts some numerically singular matrices; reject near-dependence.
    d = np.diag(L)
    if d.min() <= 1e-12 * d.max():
        raise DegenerateBasisError("degenerate estimation basis")
    return L


def generalized_sym_eig(G: np.ndarray, S: np.ndarray):
    """Solve G xi = sigma S xi; eigenvectors satisfy xi^T S xi = 1, eigenvalues ascending."""
    G = np.asarray(G, dtype=float)
    S = np.asarray(S, dtype=float)
    L = cholesky(S)
    X = solve_triangular(L, G, lower=True)
    C = solve_triangular(L, X.T, lower=True).T
    w, Y = jacobi_eigh((C + C.T) / 2)
    Xi = solve_triangular(L.T, Y, lower=False)
    norms = np.sqrt(np.einsum("ij,ik,kj->j", Xi, S, Xi))
    return w, Xi / norms
