"""Strict-dissipativity certificates for linear-quadratic MIOCPs.

A certificate is a symmetric P with Q + P - A'PA positive definite; it
is constructed by solving the Stein equation P - A'PA = eps*I - Q, which
makes the residual equal eps*I up to solver error.  The certificate does
not depend on the linear cost weightings, so only (A, Q) enter.  The
linear storage offset is not computed (existence only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import SingularMatrixError, min_eigenvalue_symmetric, solve_stein

CERTIFIED = "certified"
NOT_CERTIFIED = "not_certified"
INDETERMINATE_SINGULAR = "indeterminate_singular"


@dataclass(frozen=True)
class DissipativityCertificate:
    P: np.ndarray | None
    eps: float
    residual_min_eig: float
    status: str


def default_eps_schedule(Q) -> list:
    s = 1.0 + np.linalg.norm(np.atleast_2d(Q), "fro")
    return [1e-2 * s, 1e-4 * s, 1e-6 * s]


def verify(A, Q, P) -> float:
    """Smallest eigenvalue of Q + P - A'PA for an externally supplied P."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if not (A.shape == Q.shape == P.shape):
        raise ValueError("A, Q, P must share one square shape")
    return min_eigenvalue_symmetric(Q + P - A.T @ P @ A)


def certify(A, Q, eps_schedule=None) -> DissipativityCertificate:
    """Attempt a dissipativity certificate for the pair (A, Q).

    For each eps in the schedule (largest first, for numerical headroom),
    solve P - A'PA = eps*I - Q and verify positive definiteness of the
    residual Q + P - A'PA.  Returns the first certified P.  When every
    eps hits the eigenvalue-product singularity of the Stein map, the
    result is indeterminate: the underlying sufficient condition gives no
    verdict, which is not a refutation.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if A.shape != Q.shape or A.shape[0] != A.shape[1]:
        raise ValueError("A and Q must be square with equal shapes")
    if eps_schedule is None:
        eps_schedule = default_eps_schedule(Q)

    n = A.shape[0]
    all_singular = True
    last = None
    for eps in eps_schedule:
        try:
            sol = solve_stein(A, eps * np.eye(n) - Q)
        except SingularMatrixError:
            continue
        all_singular = False
        residual = verify(A, Q, sol.P)
        if residual > 0.0:
            return DissipativityCertificate(P=sol.P, eps=float(eps),
                                            residual_min_eig=residual,
                                            status=CERTIFIED)
        last = (sol.P, float(eps), residual)
    if all_singular:
        return DissipativityCertificate(P=None, eps=float("nan"),
                                        residual_min_eig=float("nan"),
                                        status=INDETERMINATE_SINGULAR)
    P, eps, residual = last
    return DissipativityCertificate(P=P, eps=eps, residual_min_eig=residual,
                                    status=NOT_CERTIFIED)
