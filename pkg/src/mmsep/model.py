"""Statistical model: subspace partitions, contrasts, covariances, costs.

The demixing stack for ``F`` bins and ``M`` channels is an ``(F, M, M)``
complex array ``W`` whose row ``k`` holds the conjugated demixing vector
of output ``k`` (``y_kfn = W[f, k] @ x_fn``).  A partition groups the
``M`` output rows into contiguous subspaces; the column block of
subspace ``l`` is ``W[f, rows_l].conj().T``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularDemixing

# Lower bound on auxiliary radii; the Laplace weight 1/(2r) diverges at 0.
RADIUS_FLOOR = 1e-12

# log(1e-300): demixing determinants below this magnitude are collapsed.
_LOGDET_FLOOR = -690.0


@dataclass(frozen=True)
class SubspacePartition:
    """Ordered sizes ``d_1..d_L`` of contiguous channel groups."""

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(d) for d in self.sizes)
        if not sizes or any(d <= 0 for d in sizes):
            raise ValueError(f"subspace sizes must be positive, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def singletons(cls, n_channels):
        return cls((1,) * n_channels)

    @classmethod
    def extraction(cls, n_targets, n_channels):
        """``n_targets`` single-channel groups plus one background group."""
        if not 0 < n_targets < n_channels:
            raise ValueError(f"need 0 < K < M, got K={n_targets} M={n_channels}")
        return cls((1,) * n_targets + (n_channels - n_targets,))

    @property
    def n_channels(self):
        return sum(self.sizes)

    @property
    def n_subspaces(self):
        return len(self.sizes)

    def offset(self, ell):
        return sum(self.sizes[:ell])

    def slice(self, ell):
        start = self.offset(ell)
        return slice(start, start + self.sizes[ell])

    def indices(self, ell):
        return np.arange(self.offset(ell), self.offset(ell) + self.sizes[ell])


@dataclass(frozen=True)
class ContrastModel:
    """Radial contrast ``G(r)`` of a spherical super-Gaussian source prior.

    The covariance weight is ``phi(r) = G'(r) / (2 r)``, continuous and
    nonincreasing on ``r > 0``.  Supported kinds:

    - ``"laplace"``: ``G(r) = r``, ``phi(r) = 1 / (2 r)``
    - ``"logcosh"``: ``G(r) = log(cosh(a r)) / a``, ``phi(r) = tanh(a r) / (2 r)``
      with slope ``1 <= a <= 2``
    """

    kind: str = "laplace"
    slope: float = 1.0

    def __post_init__(self):
        if self.kind not in ("laplace", "logcosh"):
            raise ValueError(f"unknown contrast kind {self.kind!r}")
        if self.kind == "logcosh" and not 1.0 <= self.slope <= 2.0:
            raise ValueError(f"logcosh slope must lie in [1, 2], got {self.slope}")
        grid = np.logspace(-6, 3, 64)
        if np.any(np.diff(self.phi(grid)) > 0):
            raise ValueError("phi(r) must be nonincreasing on r > 0")

    def G(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "laplace":
            return r
        x = self.slope * r
        # log(cosh(x)) = |x| + log1p(exp(-2|x|)) - log(2), overflow-free
        return (np.abs(x) + np.log1p(np.exp(-2.0 * np.abs(x))) - np.log(2.0)) / self.slope

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "laplace":
            return 0.5 / r
        x = self.slope * r
        tanhc = np.where(x < 1e-8, 1.0 - x**2 / 3.0, np.tanh(x) / np.where(x == 0, 1.0, x))
        return 0.5 * self.slope * tanhc


def aux_radius(Y, partition, B=None, floor=RADIUS_FLOOR):
    """Per-(subspace, frame) auxiliary radii of a separated tensor.

    ``r[l, n] = sqrt(sum_f y_lfn^H B_lf^{-1} y_lfn)``, floored at ``floor``.
    ``B`` is an optional sequence of per-subspace ``(F, d_l, d_l)`` arrays;
    ``None`` entries (or ``B=None``) mean identity.
    """
    n_frames = Y.shape[1]
    radii = np.empty((partition.n_subspaces, n_frames))
    for ell in range(partition.n_subspaces):
        block = Y[:, :, partition.slice(ell)]
        bmat = None if B is None else B[ell]
        if bmat is None:
            sq = np.einsum("fnd,fnd->n", block.conj(), block).real
        else:
            solved = np.linalg.solve(bmat, block.transpose(0, 2, 1)).transpose(0, 2, 1)
            sq = np.einsum("fnd,fnd->n", block.conj(), solved).real
        radii[ell] = np.sqrt(np.maximum(sq, 0.0))
    return np.maximum(radii, floor)


def weighted_cov(X, weights):
    """Per-bin weighted covariance ``V_f = (1/N) sum_n w_n x_fn x_fn^H``."""
    n_frames = X.shape[1]
    V = np.einsum("n,fna,fnb->fab", weights, X, X.conj()) / n_frames
    return 0.5 * (V + V.conj().transpose(0, 2, 1))


def sample_cov(X):
    """Per-bin sample covariance (unit weights)."""
    return weighted_cov(X, np.ones(X.shape[1]))


def _log_abs_det(W):
    sign, logabs = np.linalg.slogdet(W)
    if np.any(logabs < _LOGDET_FLOOR) or np.any(sign == 0):
        raise SingularDemixing("demixing determinant magnitude below 1e-300")
    return logabs


def nll_cost(W, Y, partition, contrast, B=None, gaussian_bg=False, profile_from=None):
    """Exact negative log-likelihood (constant terms dropped).

    Each subspace contributes ``sum_n G(r_ln)``; with ``gaussian_bg=True``
    the last subspace is modeled as time-invariant Gaussian instead and
    contributes the quadratic ``sum_fn y^H B^{-1} y``.  All variants share
    the ``-2 N sum_f log|det W_f|`` term.

    ``profile_from`` (a per-bin sample covariance stack, implies
    ``gaussian_bg``) evaluates the Gaussian block at its maximum
    likelihood covariance ``U^H C U`` instead of a fixed ``B``: the
    quadratic term becomes the constant ``N (M - K) F`` and the
    log-determinant of the fitted covariance enters.  This is the
    quantity the parametric background refresh actually descends.
    """
    n_frames = Y.shape[1]
    logabs = _log_abs_det(W)
    radii = aux_radius(Y, partition, B)
    gaussian_bg = gaussian_bg or profile_from is not None
    n_super = partition.n_subspaces - 1 if gaussian_bg else partition.n_subspaces
    cost = float(np.sum(contrast.G(radii[:n_super])))
    if profile_from is not None:
        U = W[:, partition.slice(partition.n_subspaces - 1), :].conj().transpose(0, 2, 1)
        fitted = U.conj().transpose(0, 2, 1) @ profile_from @ U
        sign, logdet_b = np.linalg.slogdet(fitted)
        if np.any(sign == 0):
            raise SingularDemixing("fitted background covariance is singular")
        cost += n_frames * U.shape[2] * W.shape[0]  # tr(B^-1 U^H C U) = M - K
        cost += n_frames * float(np.sum(logdet_b))
    elif gaussian_bg:
        cost += float(np.sum(radii[-1] ** 2))
    return cost - 2.0 * n_frames * float(np.sum(logabs))


def surrogate_cost(W, V, partition, n_frames, B=None):
    """Quadratic-plus-logdet majorizer value.

    ``N * sum_lf tr(Wbar^H V_lf Wbar B_lf^{-1}) - 2 N sum_f log|det W_f|``
    where ``V`` is a sequence of per-subspace ``(F, M, M)`` weighted
    covariances and ``Wbar`` the column block of subspace ``l``.
    """
    logabs = _log_abs_det(W)
    total = 0.0
    for ell in range(partition.n_subspaces):
        rows = W[:, partition.slice(ell), :]  # (F, d, M) = Wbar^H
        quad = rows @ V[ell] @ rows.conj().transpose(0, 2, 1)
        bmat = None if B is None else B[ell]
        if bmat is not None:
            quad = np.linalg.solve(bmat, quad)
        total += float(np.trace(quad, axis1=-2, axis2=-1).real.sum())
    return n_frames * total - 2.0 * n_frames * float(np.sum(logabs))


def surrogate_constant(contrast, radii, n_gaussian=0):
    """Majorization offset so that ``surrogate + constant >= nll`` with
    equality at the expansion point.

    ``sum_ln (G(r) - r G'(r) / 2)`` over super-Gaussian subspaces; the
    radii of a trailing Gaussian block (``n_gaussian`` rows of ``radii``)
    contribute zero and are skipped.
    """
    n_super = radii.shape[0] - n_gaussian
    r = radii[:n_super]
    return float(np.sum(contrast.G(r) - r**2 * contrast.phi(r)))


def head_residual(W, V, partition, B=None, blocks=None, off_block_only=False):
    """Max deviation from the block stationarity conditions.

    Computes ``max_f | W_f [V_1f Wbar_1f ... V_Lf Wbar_Lf] - blockdiag(B) |``
    entrywise.  ``blocks`` restricts the check to the given column
    subspaces; ``off_block_only`` ignores the diagonal blocks and
    measures only cross-subspace leakage.
    """
    n_bins, n_chan, _ = W.shape
    check = range(partition.n_subspaces) if blocks is None else blocks
    worst = 0.0
    for ell in check:
        sl = partition.slice(ell)
        wbar = W[:, sl, :].conj().transpose(0, 2, 1)  # (F, M, d)
        col = W @ (V[ell] @ wbar)  # (F, M, d)
        diag = col[:, sl, :].copy()
        if off_block_only:
            col[:, sl, :] = 0.0
        else:
            bmat = np.eye(partition.sizes[ell]) if B is None or B[ell] is None else B[ell]
            col[:, sl, :] = diag - bmat
        worst = max(worst, float(np.max(np.abs(col))))
    return worst
