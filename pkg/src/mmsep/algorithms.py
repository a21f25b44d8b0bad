"""Separation drivers composing the block updates into full algorithms.

Eight variants are provided.  The determined family separates all ``M``
channels and keeps the ``K`` strongest outputs; the extraction family
estimates ``K`` demixing vectors against a Gaussian background block.

- ``auxiva-ip``       per-source single-vector sweeps
- ``auxiva-ip2``      stride-2 pairwise sweeps
- ``overiva-ip``      parametric background refresh + single-vector sweeps
- ``overiva-ip2``     parametric background refresh + pairwise sweeps
- ``overiva-ip-np``   non-parametric background refresh + single-vector sweeps
- ``overiva-ip2-np``  non-parametric background refresh + pairwise sweeps
- ``overiva-dxbg``    joint update of one vector and the background
- ``five``            single target, global two-block solve per iteration

Inputs are expected to be pre-whitened (see :func:`pca_whiten`); all
drivers then use identity intra-subspace covariance structure.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from . import updates as up
from .errors import NotPositiveDefinite
from .model import (
    RADIUS_FLOOR,
    ContrastModel,
    SubspacePartition,
    aux_radius,
    head_residual,
    nll_cost,
    sample_cov,
    weighted_cov,
)

ALGORITHMS = (
    "auxiva-ip",
    "auxiva-ip2",
    "overiva-ip",
    "overiva-ip2",
    "overiva-ip-np",
    "overiva-ip2-np",
    "overiva-dxbg",
    "five",
)

_ALIASES = {"overiva-dx-bg": "overiva-dxbg", "overiva-demix-bg": "overiva-dxbg"}


def canonical_algorithm(name):
    key = name.strip().lower().replace("/", "-").replace("_", "-")
    key = _ALIASES.get(key, key)
    if key not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
    return key


@dataclass(frozen=True)
class SeparatorConfig:
    """Separation options.

    ``n_src`` is the number of target sources ``K`` (defaults to all
    channels).  ``tol > 0`` stops early when the relative demixing change
    ``max_f ||dW_f||_F / ||W_f||_F`` falls below it; the default runs the
    full iteration budget.  ``seed`` is recorded for provenance only; the
    drivers themselves are deterministic.
    """

    algorithm: str = "auxiva-ip2"
    n_src: int | None = None
    n_iter: int = 100
    contrast: ContrastModel = field(default_factory=ContrastModel)
    tol: float = 0.0
    seed: int | None = None
    ridge: float = la.DEFAULT_RIDGE


@dataclass
class SeparationReport:
    """Per-run convergence record and final demixing stack."""

    algorithm: str
    partition: tuple
    selected: tuple
    n_iterations: int
    cost_trace: list
    head_trace: list
    wall_ms: list
    demixing: np.ndarray

    def max_relative_cost_increase(self):
        """Largest relative step-to-step cost increase (0 if monotone)."""
        worst = 0.0
        for prev, cur in zip(self.cost_trace, self.cost_trace[1:]):
            worst = max(worst, (cur - prev) / max(abs(prev), 1e-12))
        return worst


def pca_whiten(X, keep=None, ridge=la.DEFAULT_RIDGE):
    """Per-bin PCA whitening transform.

    Returns ``(Xw, T)`` where ``T`` has shape ``(F, keep, M)``, components
    ordered by descending eigenvalue, and the sample covariance of ``Xw``
    is the identity.
    """
    n_bins, _, n_chan = X.shape
    keep = n_chan if keep is None else int(keep)
    if not 0 < keep <= n_chan:
        raise ValueError(f"keep must lie in 1..{n_chan}, got {keep}")
    C = la.add_ridge(sample_cov(X), ridge)
    lam, vecs = np.linalg.eigh(C)
    lam = lam[:, ::-1][:, :keep]
    vecs = vecs[:, :, ::-1][:, :, :keep]
    if np.any(lam <= 0):
        raise NotPositiveDefinite("sample covariance not positive definite after ridge")
    T = (vecs / np.sqrt(lam[:, None, :])).conj().transpose(0, 2, 1)
    return X @ T.transpose(0, 2, 1), T


def project_back(Y, W, whiten=None, selected=None):
    """Rescale separated channels to the source images at microphone 1.

    The composed transform ``T_f = W_f @ whiten_f`` maps microphones to
    outputs; channel ``k`` is scaled by row 1 of its pseudo-inverse,
    column ``selected[k]``.
    """
    T = W if whiten is None else W @ whiten
    A = np.linalg.pinv(T)
    sel = np.arange(Y.shape[2]) if selected is None else np.asarray(selected, dtype=int)
    scale = A[:, 0, :][:, sel]
    return Y * scale[:, None, :]


def _demix(X, W):
    return X @ W.transpose(0, 2, 1)


def _refresh_rows(Y, X, W, rows):
    Y[:, :, rows] = X @ W[:, rows, :].transpose(0, 2, 1)


def _radius(Y, rows):
    sq = np.einsum("fnd,fnd->n", Y[:, :, rows].conj(), Y[:, :, rows]).real
    return np.maximum(np.sqrt(sq), RADIUS_FLOOR)


def _pairs(count):
    pairs = [(k, k + 1) for k in range(0, count - 1, 2)]
    if count % 2:
        pairs.append((count - 1, None))
    return pairs


def _weighted(X, contrast, radius, ridge):
    return la.add_ridge(weighted_cov(X, contrast.phi(radius)), ridge)


def _set_rows(W, rows, block):
    """Write an (M, d) column block back as conjugated rows."""
    W[rows, :] = block.conj().T


def _bg_refresh(W, C, n_targets, nonparam):
    n_bins, n_chan, _ = W.shape
    if nonparam:
        for f in range(n_bins):
            U = up.background_nonparametric(W[f], C[f], n_targets)
            W[f, n_targets:, :] = U.conj().T
    else:
        eye = np.eye(n_chan - n_targets)
        for f in range(n_bins):
            J = up.background_parametric(W[f, :n_targets, :].conj().T, C[f])
            W[f, n_targets:, :n_targets] = J
            W[f, n_targets:, n_targets:] = -eye


def _ip_source_update(X, W, Y, partition, contrast, k, ridge):
    V = _weighted(X, contrast, _radius(Y, [k]), ridge)
    for f in range(W.shape[0]):
        wb = up.update_single_subspace(W[f], partition, k, V[f])
        W[f, k, :] = wb[:, 0].conj()
    _refresh_rows(Y, X, W, [k])


def _ip2_pair_update(X, W, Y, partition, contrast, p, q, ridge):
    Vp = _weighted(X, contrast, _radius(Y, [p]), ridge)
    Vq = _weighted(X, contrast, _radius(Y, [q]), ridge)
    for f in range(W.shape[0]):
        w1, w2 = up.update_pair_subspaces(W[f], partition, p, q, Vp[f], Vq[f])
        W[f, p, :] = w1[:, 0].conj()
        W[f, q, :] = w2[:, 0].conj()
    _refresh_rows(Y, X, W, [p, q])


def _sweep_auxiva_ip(X, W, Y, partition, contrast, C, n_targets, ridge):
    for k in range(W.shape[1]):
        _ip_source_update(X, W, Y, partition, contrast, k, ridge)


def _sweep_auxiva_ip2(X, W, Y, partition, contrast, C, n_targets, ridge):
    for p, q in _pairs(W.shape[1]):
        if q is None:
            _ip_source_update(X, W, Y, partition, contrast, p, ridge)
        else:
            _ip2_pair_update(X, W, Y, partition, contrast, p, q, ridge)


def _make_overiva_ip_sweep(nonparam):
    def sweep(X, W, Y, partition, contrast, C, n_targets, ridge):
        for k in range(n_targets):
            _bg_refresh(W, C, n_targets, nonparam)
            _ip_source_update(X, W, Y, partition, contrast, k, ridge)

    return sweep


def _make_overiva_ip2_sweep(nonparam):
    def sweep(X, W, Y, partition, contrast, C, n_targets, ridge):
        for p, q in _pairs(n_targets):
            _bg_refresh(W, C, n_targets, nonparam)
            if q is None:
                _ip_source_update(X, W, Y, partition, contrast, p, ridge)
            else:
                _ip2_pair_update(X, W, Y, partition, contrast, p, q, ridge)

    return sweep


def _sweep_overiva_dxbg(X, W, Y, partition, contrast, C, n_targets, ridge):
    for k in range(n_targets):
        V = _weighted(X, contrast, _radius(Y, [k]), ridge)
        for f in range(W.shape[0]):
            w, U = up.joint_dx_bg(W[f], k, V[f], C[f], n_targets)
            W[f, k, :] = w.conj()
            W[f, n_targets:, :] = U.conj().T
        _refresh_rows(Y, X, W, [k])


def _sweep_five(X, W, Y, partition, contrast, C, n_targets, ridge):
    n_chan = W.shape[1]
    V = _weighted(X, contrast, _radius(Y, [0]), ridge)
    for f in range(W.shape[0]):
        w1, w2 = up.update_two_subspace_global(V[f], C[f], 1, n_chan - 1)
        W[f, 0, :] = w1[:, 0].conj()
        W[f, 1:, :] = w2.conj().T
    _refresh_rows(Y, X, W, list(range(n_chan)))


_SWEEPS = {
    "auxiva-ip": _sweep_auxiva_ip,
    "auxiva-ip2": _sweep_auxiva_ip2,
    "overiva-ip": _make_overiva_ip_sweep(False),
    "overiva-ip2": _make_overiva_ip2_sweep(False),
    "overiva-ip-np": _make_overiva_ip_sweep(True),
    "overiva-ip2-np": _make_overiva_ip2_sweep(True),
    "overiva-dxbg": _sweep_overiva_dxbg,
    "five": _sweep_five,
}


def _head_covariances(X, Y, partition, contrast, gaussian_bg, C, ridge):
    radii = aux_radius(Y, partition)
    n_super = partition.n_subspaces - (1 if gaussian_bg else 0)
    V = [_weighted(X, contrast, radii[ell], ridge) for ell in range(n_super)]
    if gaussian_bg:
        V.append(C)
    return V


def separate(X, cfg=SeparatorConfig(), callback=None):
    """Run one separation algorithm on a spectral tensor.

    Parameters
    ----------
    X : ndarray (n_bins, n_frames, n_channels)
        Mixture tensor, ideally pre-whitened.
    cfg : SeparatorConfig
    callback : callable, optional
        Called as ``callback(iteration, Y, W)`` after every iteration
        with the full (unselected, unscaled) output tensor.

    Returns
    -------
    (Y, report)
        ``Y`` holds the ``K`` separated channels; the report carries the
        cost/head/runtime traces and the final demixing stack.
    """
    X = np.ascontiguousarray(X, dtype=complex)
    n_bins, n_frames, n_chan = X.shape
    algo = canonical_algorithm(cfg.algorithm)
    n_targets = n_chan if cfg.n_src is None else int(cfg.n_src)
    if not 0 < n_targets <= n_chan:
        raise ValueError(f"n_src must lie in 1..{n_chan}, got {n_targets}")
    if algo == "five" and n_targets != 1:
        raise ValueError("five extracts a single source; set n_src=1")
    if algo.startswith("overiva") and n_targets >= n_chan:
        raise ValueError("overdetermined variants need n_src < n_channels")
    # Pairwise variants need at least two targets.
    if algo == "overiva-ip2" and n_targets < 2:
        algo = "overiva-ip"
    if algo == "overiva-ip2-np" and n_targets < 2:
        algo = "overiva-ip-np"

    determined = algo.startswith("auxiva")
    if determined:
        partition = SubspacePartition.singletons(n_chan)
        W = np.tile(np.eye(n_chan, dtype=complex), (n_bins, 1, 1))
        C = None
        gaussian_bg = False
    else:
        partition = SubspacePartition.extraction(n_targets, n_chan)
        W = np.tile(
            np.diag(np.concatenate(
                [np.ones(n_targets), -np.ones(n_chan - n_targets)]
            )).astype(complex),
            (n_bins, 1, 1),
        )
        C = la.add_ridge(sample_cov(X), cfg.ridge)
        gaussian_bg = True

    # The parametric background refresh descends the likelihood with the
    # background covariance at its fitted value, not at identity; record
    # that exact cost for those variants.
    parametric = algo in ("overiva-ip", "overiva-ip2")

    def _cost(W, Y):
        if parametric:
            return nll_cost(W, Y, partition, cfg.contrast, profile_from=C)
        return nll_cost(W, Y, partition, cfg.contrast, gaussian_bg=gaussian_bg)

    sweep = _SWEEPS[algo]
    Y = _demix(X, W)
    cost_trace = [_cost(W, Y)]
    head_trace = [
        head_residual(
            W,
            _head_covariances(X, Y, partition, cfg.contrast, gaussian_bg, C, cfg.ridge),
            partition,
            off_block_only=True,
        )
    ]
    wall_ms = []

    for it in range(cfg.n_iter):
        prev = W.copy() if cfg.tol > 0 else None
        start = time.perf_counter()
        try:
            sweep(X, W, Y, partition, cfg.contrast, C, n_targets, cfg.ridge)
            Y = _demix(X, W)
        except Exception as exc:
            raise type(exc)(f"iteration {it + 1}: {exc}") from exc
        wall_ms.append((time.perf_counter() - start) * 1e3)

        cost_trace.append(_cost(W, Y))
        head_trace.append(
            head_residual(
                W,
                _head_covariances(X, Y, partition, cfg.contrast, gaussian_bg, C, cfg.ridge),
                partition,
                off_block_only=True,
            )
        )
        if callback is not None:
            callback(it + 1, Y, W)
        if cfg.tol > 0:
            num = np.linalg.norm(W - prev, axis=(1, 2))
            den = np.linalg.norm(prev, axis=(1, 2))
            if float(np.max(num / den)) < cfg.tol:
                break

    if determined:
        powers = np.einsum("fnm,fnm->m", Y.conj(), Y).real
        selected = tuple(int(i) for i in np.argsort(-powers, kind="stable")[:n_targets])
    else:
        selected = tuple(range(n_targets))

    report = SeparationReport(
        algorithm=algo,
        partition=partition.sizes,
        selected=selected,
        n_iterations=len(wall_ms),
        cost_trace=cost_trace,
        head_trace=head_trace,
        wall_ms=wall_ms,
        demixing=W,
    )
    return Y[:, :, list(selected)], report
