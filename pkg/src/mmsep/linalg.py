"""Dense complex linear algebra for small per-bin Hermitian problems.

All routines operate on a single matrix at a time; looping over frequency
bins is left to the caller.  Matrices are small (M <= ~16), so plain
LAPACK-backed dense factorizations are used throughout.
"""

import warnings

import numpy as np
from scipy.linalg import lu_factor, lu_solve, solve_triangular

from .errors import ConvergenceFailure, NotPositiveDefinite, Singular

# Relative Tikhonov ridge applied to data covariances before they are
# factorized or inverted.  Weighted covariances estimated from few frames
# can be numerically singular.
DEFAULT_RIDGE = 1e-10

# Pivots below this fraction of the matrix norm are treated as singular.
_PIVOT_RTOL = 1e-13


def add_ridge(cov, rel=DEFAULT_RIDGE):
    """Return ``cov + rel * mean(diag(cov)) * I``.

    Accepts a single matrix or a stack of matrices (ridge computed per
    matrix from its own diagonal).
    """
    cov = np.asarray(cov)
    dim = cov.shape[-1]
    scale = np.trace(cov, axis1=-2, axis2=-1).real / dim
    eye = np.eye(dim)
    return cov + (rel * scale)[..., None, None] * eye


def hermitize(mat):
    """Symmetrize ``mat`` to remove rounding-level conjugate asymmetry."""
    return 0.5 * (mat + np.conj(np.swapaxes(mat, -2, -1)))


def cholesky(hmat, ridge=0.0):
    """Upper-triangular factor ``Q`` with ``Q^H Q = hmat + ridge*mean(diag)*I``.

    Parameters
    ----------
    hmat : ndarray (n, n)
        Hermitian matrix.
    ridge : float
        Nonnegative relative ridge added before factorization.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is nonpositive after ridging.
    """
    hmat = np.asarray(hmat, dtype=complex)
    if ridge > 0.0:
        hmat = add_ridge(hmat, ridge)
    try:
        lower = np.linalg.cholesky(hmat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            f"matrix of size {hmat.shape[0]} is not positive definite"
        ) from exc
    return lower.conj().T


def herm_eig(hmat):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, U)`` with real eigenvalues ``w`` sorted in descending
    order (ties keep the solver's original order) and orthonormal
    eigenvector columns ``U``.
    """
    hmat = np.asarray(hmat, dtype=complex)
    try:
        w, u = np.linalg.eigh(hmat)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure("eigensolver did not converge") from exc
    order = np.argsort(-w, kind="stable")
    return w[order], u[:, order]


def gen_herm_eig(amat, bmat, ridge=0.0):
    """Solve ``A v = lambda B v`` for Hermitian ``A`` and positive definite ``B``.

    Reduces by the Cholesky factor ``B = Q^H Q``, solves the ordinary
    Hermitian problem for ``Q^{-H} A Q^{-1}``, and maps the eigenvectors
    back as ``v = Q^{-1} u``.  Eigenvalues come out descending and the
    eigenvectors satisfy ``v_i^H B v_j = delta_ij``.
    """
    amat = np.asarray(amat, dtype=complex)
    qmat = cholesky(bmat, ridge=ridge)
    qh = qmat.conj().T
    # Q^{-H} A, then Q^{-H} (Q^{-H} A)^H = Q^{-H} A Q^{-1} for Hermitian A.
    half = solve_triangular(qh, amat, lower=True)
    reduced = solve_triangular(qh, half.conj().T, lower=True)
    w, u = herm_eig(hermitize(reduced))
    v = solve_triangular(qmat, u, lower=False)
    return w, v


def solve(amat, bmat):
    """Solve ``A X = B`` by partially pivoted LU.

    Raises
    ------
    Singular
        If any pivot magnitude falls below ``1e-13 * ||A||_F``.
    """
    amat = np.asarray(amat, dtype=complex)
    bmat = np.asarray(bmat, dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = lu_factor(amat, check_finite=False)
    bound = _PIVOT_RTOL * np.linalg.norm(amat)
    if np.min(np.abs(np.diag(lu))) < bound:
        raise Singular(f"pivot below {bound:.3e} while solving {amat.shape} system")
    return lu_solve((lu, piv), bmat, check_finite=False)
