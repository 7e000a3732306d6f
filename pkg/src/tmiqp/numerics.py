"""Dense linear-algebra kernels: Stein equation solves, symmetric
eigenvalue bounds, and regularized symmetric indefinite solves.

Everything here operates on small dense matrices (n up to ~100); no
attempt is made at sparse or large-scale variants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Reciprocal condition numbers below this are reported as singular
# rather than returning garbage.
RCOND_SINGULAR = 1e-12


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a linear map is numerically singular."""


@dataclass(frozen=True)
class SteinSolution:
    """Symmetric solution of P - A'PA = W with its Frobenius residual."""

    P: np.ndarray
    residual_norm: float


def _as_square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def solve_stein(A, W) -> SteinSolution:
    """Solve the discrete-time Stein equation P - A'PA = W.

    Uses dense Kronecker vectorization, (I - A' (x) A') vec(P) = vec(W),
    which costs O(n^6) in time and O(n^4) in memory; acceptable for the
    target sizes (n <= ~100).  Raises SingularMatrixError when some
    eigenvalue product lam_i(A) * lam_j(A) equals 1 (the Stein map is
    then singular, detected via the condition estimate of the dense
    solve).
    """
    A = _as_square(A, "A")
    W = _as_square(W, "W")
    if A.shape != W.shape:
        raise ValueError(f"A and W shapes differ: {A.shape} vs {W.shape}")
    if not np.allclose(W, W.T, atol=1e-12 * (1.0 + np.abs(W).max())):
        raise ValueError("W must be symmetric")

    n = A.shape[0]
    K = np.eye(n * n) - np.kron(A.T, A.T)
    if 1.0 / np.linalg.cond(K, 1) < RCOND_SINGULAR:
        raise SingularMatrixError(
            "Stein map is singular: some eigenvalue product of A equals 1"
        )
    vecP = np.linalg.solve(K, W.reshape(-1))
    P = vecP.reshape(n, n)
    P = 0.5 * (P + P.T)
    residual = np.linalg.norm(P - A.T @ P @ A - W, "fro")
    return SteinSolution(P=P, residual_norm=float(residual))


def min_eigenvalue_symmetric(M) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    M = _as_square(M, "M")
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def solve_symmetric_indefinite(K, b, reg: float = 1e-10):
    """Solve K x = b for symmetric (possibly indefinite) K.

    LDL' factorization with static diagonal regularization: if the plain
    factorization yields a (near-)singular D, the solve is repeated on
    K + reg*I followed by one step of iterative refinement against the
    unregularized K.  Raises SingularMatrixError when the system stays
    singular after regularization.
    """
    K = _as_square(K, "K")
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape[0] != K.shape[0]:
        raise ValueError("dimension mismatch between K and b")

    scale = 1.0 + np.abs(K).max()

    def _ldl_solve(M, rhs):
        lu, d, perm = scipy.linalg.ldl(M)
        # d is block diagonal with 1x1/2x2 blocks; singular if any block is
        diag_ok = np.min(np.abs(np.linalg.eigvals(d))) > RCOND_SINGULAR * scale
        if not diag_ok:
            raise SingularMatrixError("zero pivot in LDL factorization")
        y = scipy.linalg.solve_triangular(lu[perm], rhs[perm], lower=True,
                                          unit_diagonal=True)
        z = np.linalg.solve(d, y)
        w = scipy.linalg.solve_triangular(lu[perm].T, z, lower=False,
                                          unit_diagonal=True)
        x = np.empty_like(w)
        x[perm] = w
        return x

    try:
        x = _ldl_solve(0.5 * (K + K.T), b)
    except SingularMatrixError:
        Kreg = 0.5 * (K + K.T) + reg * np.eye(K.shape[0])
        try:
            x = _ldl_solve(Kreg, b)
        except SingularMatrixError as exc:
            raise SingularMatrixError("singular after regularization") from exc
        # one refinement step against the unregularized system
        x = x + _ldl_solve(Kreg, b - K @ x)
        if np.linalg.norm(K @ x - b) > 1e-6 * (1.0 + np.linalg.norm(b)):
            raise SingularMatrixError("singular after regularization")
    return x
