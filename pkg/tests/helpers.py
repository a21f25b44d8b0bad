"""Shared fixtures and small construction utilities for the test suite."""

import numpy as np


def crandn(rng, *shape):
    """Standard circular complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_hermitian(rng, n):
    mat = crandn(rng, n, n)
    return 0.5 * (mat + mat.conj().T)


def random_hermitian_pd(rng, n, shift=1.0):
    mat = crandn(rng, n, n)
    return mat @ mat.conj().T + shift * np.eye(n)


def random_pd_stack(rng, n_bins, n, shift=1.0):
    mats = crandn(rng, n_bins, n, n)
    return mats @ mats.conj().transpose(0, 2, 1) + shift * np.eye(n)


def align_phase(reference, vec):
    """Rotate ``vec`` by a global phase to best match ``reference``."""
    inner = np.vdot(vec, reference)
    mag = abs(inner)
    return vec if mag == 0 else vec * (inner / mag)


def hermitian_part(mat):
    return 0.5 * (mat + mat.conj().T)
