"""Closed-form block updates minimizing the quadratic-plus-logdet surrogate.

All functions operate at a single frequency bin on an ``(M, M)`` demixing
matrix ``W`` (rows are conjugated demixing vectors) and Hermitian
positive definite weighted covariances.  They return new column blocks;
writing them back into the stack is the caller's job, e.g.::

    W[rows, :] = new_block.conj().T

Null-space bases are obtained with the selector-inverse trick
``X = (W V)^{-1} E`` rather than a QR factorization.
"""

import numpy as np
from scipy.linalg import solve_triangular

from . import linalg as la


def selector(n_channels, indices):
    """Canonical-basis column selector ``E`` of shape ``(M, len(indices))``."""
    indices = np.asarray(indices, dtype=int)
    if indices.size != np.unique(indices).size:
        raise ValueError(f"duplicate selector indices {indices}")
    if indices.size and (indices.min() < 0 or indices.max() >= n_channels):
        raise ValueError(f"selector indices {indices} out of range for M={n_channels}")
    E = np.zeros((n_channels, indices.size), dtype=complex)
    E[indices, np.arange(indices.size)] = 1.0
    return E


def _sqrt_factor(bmat):
    """Upper-triangular ``B^{1/2}`` with ``(B^{1/2})^H B^{1/2} = B``."""
    return la.cholesky(bmat)


def _right_div_triangular(mat, qmat):
    """``mat @ qmat^{-1}`` for upper-triangular ``qmat``."""
    return solve_triangular(qmat.T, mat.T, lower=True).T


def update_single_subspace(W, partition, ell, V, B=None, ridge=0.0):
    """Globally optimal update of one column block, others fixed.

    Finds the ``(M, d)`` block ``Wbar`` spanning the null space of the
    other blocks under ``V`` and normalized so ``Wbar^H V Wbar = B``
    (identity when ``B`` is None).  With ``d = 1`` this is the classic
    iterative-projection rule: solve then scale.
    """
    E = selector(W.shape[0], partition.indices(ell))
    X = la.solve(W @ V, E)
    gram = la.hermitize(X.conj().T @ (V @ X))
    qmat = la.cholesky(gram, ridge=ridge)
    wbar = _right_div_triangular(X, qmat)
    if B is not None:
        wbar = wbar @ _sqrt_factor(B)
    return wbar


def update_two_subspace_global(V1, V2, d1, d2, B1=None, B2=None, ridge=0.0):
    """Global minimizer over both blocks when the partition has two groups.

    Solves the generalized eigenproblem of ``(V1, V2)``; block 1 takes the
    ``d1`` smallest eigenpairs (each column scaled by ``lambda^{-1/2}``)
    and block 2 the ``d2`` largest.  Returns ``(Wbar1, Wbar2)`` of shapes
    ``(M, d1)`` and ``(M, d2)``.
    """
    n_chan = V1.shape[0]
    if d1 + d2 != n_chan:
        raise ValueError(f"block sizes {d1}+{d2} must cover M={n_chan}")
    lam, vecs = la.gen_herm_eig(V1, V2, ridge=ridge)
    low = np.arange(n_chan - 1, n_chan - d1 - 1, -1)  # smallest first
    wbar1 = vecs[:, low] / np.sqrt(lam[low])
    wbar2 = vecs[:, :d2]
    if B1 is not None:
        wbar1 = wbar1 @ _sqrt_factor(B1)
    if B2 is not None:
        wbar2 = wbar2 @ _sqrt_factor(B2)
    return wbar1, wbar2


def update_pair_subspaces(W, partition, ell1, ell2, V1, V2, B1=None, B2=None, ridge=0.0):
    """Joint global update of two column blocks, remaining blocks fixed.

    Reduces to a ``(d1+d2)``-dimensional two-block problem on the null
    space of the fixed blocks, solves it by a generalized
    eigendecomposition (block 1 takes the largest eigenpairs in the
    reduced pencil), and maps back.  Returns ``(Wbar1, Wbar2)``.
    """
    d1, d2 = partition.sizes[ell1], partition.sizes[ell2]
    idx = np.concatenate([partition.indices(ell1), partition.indices(ell2)])
    E = selector(W.shape[0], idx)
    P1 = la.solve(W @ V1, E)
    P2 = la.solve(W @ V2, E)
    Vt1 = la.hermitize(P1.conj().T @ (V1 @ P1))
    Vt2 = la.hermitize(P2.conj().T @ (V2 @ P2))
    lam, hvec = la.gen_herm_eig(Vt1, Vt2, ridge=ridge)
    wbar1 = P1 @ (hvec[:, :d1] / np.sqrt(lam[:d1]))
    wbar2 = P2 @ hvec[:, d1 : d1 + d2]
    if B1 is not None:
        wbar1 = wbar1 @ _sqrt_factor(B1)
    if B2 is not None:
        wbar2 = wbar2 @ _sqrt_factor(B2)
    return wbar1, wbar2


def background_parametric(W_target, C):
    """Solve the orthogonality constraint for the background coupling.

    ``W_target`` is the ``(M, K)`` matrix of target demixing vector
    columns.  Returns ``J`` of shape ``(M-K, K)`` such that the
    background block ``U^H = [J, -I]`` satisfies ``U^H C W_target = 0``.
    Cost is one ``K x K`` solve.
    """
    n_chan, n_targets = W_target.shape
    G = C @ W_target
    top, bottom = G[:n_targets], G[n_targets:]
    # J = bottom @ top^{-1}
    return la.solve(top.conj().T, bottom.conj().T).conj().T


def background_nonparametric(W, C, n_targets):
    """Full background block refresh with unit diagonal scaling.

    Returns ``U`` of shape ``(M, M-K)`` whose columns span the null space
    of the target rows under ``C`` and satisfy ``u^H C u = 1``.
    """
    n_chan = W.shape[0]
    E = selector(n_chan, np.arange(n_targets, n_chan))
    U = la.solve(W @ C, E)
    norms = np.sqrt(np.einsum("mk,mk->k", U.conj(), C @ U).real)
    return U / norms


def joint_dx_bg(W, k, V, C, n_targets, ridge=0.0):
    """Joint update of one target demixing vector and the background.

    Reduces both the weighted covariance ``V`` of target ``k`` and the
    sample covariance ``C`` onto the null space of the other target rows,
    solves the ``(M-K+1)``-dimensional generalized eigenproblem, and
    assigns the top eigenpair to the target.  Returns ``(w, U)`` with the
    new demixing vector ``w`` (shape ``(M,)``) and background ``U``
    (shape ``(M, M-K)``, columns scaled so ``U^H C U = I``).
    """
    n_chan = W.shape[0]
    idx = np.concatenate([[k], np.arange(n_targets, n_chan)])
    E = selector(n_chan, idx)
    P = la.solve(W @ V, E)
    R = la.solve(W @ C, E)
    Vt = la.hermitize(P.conj().T @ (V @ P))
    Ct = la.hermitize(R.conj().T @ (C @ R))
    lam, hvec = la.gen_herm_eig(Vt, Ct, ridge=ridge)
    top = hvec[:, 0]
    w = (P @ top) / np.sqrt((top.conj() @ (Vt @ top)).real)
    U = R @ hvec[:, 1:]
    norms = np.sqrt(np.einsum("mk,mk->k", U.conj(), C @ U).real)
    return w, U / norms
