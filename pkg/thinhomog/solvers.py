"""
Preconditioned Krylov solvers for the symmetric systems of the package.
"""

import logging

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded
from scipy.sparse.linalg import LinearOperator, cg, minres

from .constants import CG_MAXITER_FACTOR, CG_RTOL
from .errors import SolverError

logger = logging.getLogger(__name__)


def jacobi(matrix):
    """Point Jacobi preconditioner."""
    diag = matrix.diagonal()
    if np.any(diag <= 0):
        raise SolverError("Jacobi needs a positive diagonal.", np.nan, 0)
    inv = 1.0 / diag
    return LinearOperator(matrix.shape, matvec=lambda r: inv * r.ravel())


def line_jacobi(matrix):
    """
    Vertical-line block Jacobi preconditioner.

    On a grid over Q the nodes of one vertical column are contiguous, so the
    same-column coupling of a Q1 matrix is exactly its tridiagonal part
    (entries between the last node of a column and the first node of the
    next one are structurally zero). Each application is a banded Cholesky
    solve.
    """
    n = matrix.shape[0]
    bands = np.zeros((2, n))
    bands[0, 1:] = matrix.diagonal(1)
    bands[1] = matrix.diagonal()
    factor = cholesky_banded(bands, lower=False)
    return LinearOperator(
        matrix.shape,
        matvec=lambda r: cho_solve_banded((factor, False), r.ravel()),
    )


def iteration_cap(size, factor=CG_MAXITER_FACTOR):
    return int(np.ceil(factor * np.sqrt(size)))


def pcg(
    matrix,
    b,
    rtol=CG_RTOL,
    preconditioner=None,
    x0=None,
    maxiter_factor=CG_MAXITER_FACTOR,
):
    """
    Preconditioned conjugate gradients.

    Parameters
    ----------
    matrix : scipy.sparse matrix
        Symmetric positive (semi)definite system matrix. A semidefinite
        matrix is fine for a consistent right-hand side.
    b : np.ndarray
        Right-hand side.
    rtol : float
        Relative residual tolerance.
    preconditioner : LinearOperator, optional
    x0 : np.ndarray, optional
    maxiter_factor : float
        The iteration cap is ``maxiter_factor * sqrt(len(b))``.

    Returns
    -------
    x : np.ndarray
    iterations : int

    Raises
    ------
    SolverError
        If the cap is reached before the tolerance.

    """
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise ValueError("Right-hand side has non-finite entries.")
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0
    maxiter = iteration_cap(b.size, maxiter_factor)
    count = [0]

    def callback(_):
        count[0] += 1

    x, info = cg(
        matrix,
        b,
        x0=x0,
        rtol=rtol,
        atol=0.0,
        maxiter=maxiter,
        M=preconditioner,
        callback=callback,
    )
    residual = float(np.linalg.norm(b - matrix @ x) / bnorm)
    if info != 0:
        raise SolverError(
            f"CG stopped after {count[0]} iterations with relative "
            f"residual {residual:.3e} (target {rtol:.1e}).",
            residual,
            count[0],
        )
    logger.debug(f"CG converged in {count[0]} iterations ({residual:.2e}).")
    return x, count[0]


def symmetric_solve(matrix, b, rtol=CG_RTOL, maxiter_factor=CG_MAXITER_FACTOR,
                    preconditioner=None):
    """
    MINRES for symmetric, possibly indefinite systems (Newton steps).

    The optional preconditioner must be symmetric positive definite.

    Returns
    -------
    x : np.ndarray
    iterations : int

    """
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0
    count = [0]

    def callback(_):
        count[0] += 1

    x, info = minres(
        matrix,
        b,
        rtol=rtol,
        maxiter=iteration_cap(b.size, 4 * maxiter_factor),
        M=preconditioner,
        callback=callback,
    )
    if info != 0:
        residual = float(np.linalg.norm(b - matrix @ x) / bnorm)
        raise SolverError(
            f"MINRES stopped after {count[0]} iterations with relative "
            f"residual {residual:.3e}.",
            residual,
            count[0],
        )
    return x, count[0]
