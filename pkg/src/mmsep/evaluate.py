"""Scale-invariant separation metrics and permutation resolution.

The metrics accept real waveforms or flattened complex spectra; inner
products conjugate the first argument, so both cases share one code
path.  Infinite ratios are capped at +/-300 dB for serialization.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpan, ShapeMismatch, ZeroReference

DB_CAP = 300.0


def _as_vector(x):
    return np.asarray(x).ravel()


def _db(num, den):
    if den <= 0.0:
        return DB_CAP
    if num <= 0.0:
        return -DB_CAP
    val = 10.0 * np.log10(num / den)
    return float(np.clip(val, -DB_CAP, DB_CAP))


def si_sdr(reference, estimate):
    """Scale-invariant signal-to-distortion ratio in dB.

    ``10 log10(||a s||^2 / ||a s - s_hat||^2)`` with the projection
    coefficient ``a = <s_hat, s> / ||s||^2``.
    """
    ref = _as_vector(reference)
    est = _as_vector(estimate)
    if ref.shape != est.shape:
        raise ShapeMismatch(f"length mismatch {ref.shape} vs {est.shape}")
    ref_energy = np.vdot(ref, ref).real
    if ref_energy == 0.0:
        raise ZeroReference("reference signal has zero energy")
    alpha = np.vdot(ref, est) / ref_energy
    target = alpha * ref
    return _db(np.vdot(target, target).real, np.vdot(est - target, est - target).real)


def si_sir(target, interferers, estimate):
    """Scale-invariant signal-to-interference ratio in dB.

    The estimate is decomposed by least squares onto the span of
    ``[target] + interferers``; the part collinear with the target is the
    wanted signal, the remainder of the projection is interference.
    """
    tgt = _as_vector(target)
    est = _as_vector(estimate)
    basis = [tgt] + [_as_vector(s) for s in interferers]
    if any(b.shape != est.shape for b in basis):
        raise ShapeMismatch("reference/estimate length mismatch")
    tgt_energy = np.vdot(tgt, tgt).real
    if tgt_energy == 0.0:
        raise ZeroReference("target signal has zero energy")

    wanted = (np.vdot(tgt, est) / tgt_energy) * tgt
    if len(basis) == 1:
        return _db(np.vdot(wanted, wanted).real, 0.0)

    B = np.stack(basis, axis=1)
    gram = B.conj().T @ B
    rhs = B.conj().T @ est
    try:
        coeffs = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSpan("reference signals are linearly dependent") from exc
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise DegenerateSpan("reference signals are nearly linearly dependent")
    projected = B @ coeffs
    interference = projected - wanted
    return _db(np.vdot(wanted, wanted).real, np.vdot(interference, interference).real)


def resolve_permutation(references, estimates):
    """Assignment of estimates to references maximizing total SI-SIR.

    Exhaustive over all assignments (intended for K <= 3); ties are
    broken by lexicographic order.  Returns a tuple ``perm`` with
    ``perm[j]`` the reference index matched to estimate ``j``.
    """
    n = len(references)
    if len(estimates) != n:
        raise ShapeMismatch(f"{len(estimates)} estimates for {n} references")
    score = np.empty((n, n))
    for j, est in enumerate(estimates):
        for i, ref in enumerate(references):
            others = [references[q] for q in range(n) if q != i]
            score[j, i] = si_sir(ref, others, est)
    best, best_total = None, -np.inf
    for perm in itertools.permutations(range(n)):
        total = sum(score[j, perm[j]] for j in range(n))
        if total > best_total:
            best, best_total = perm, total
    return best


@dataclass
class MetricReport:
    """Per-source metrics after permutation alignment."""

    si_sdr: list
    si_sir: list
    permutation: tuple
    success: list

    @property
    def all_success(self):
        return all(self.success)


def evaluate_separation(references, estimates, residual=None):
    """Match estimates to references and compute per-source metrics.

    ``residual`` is an optional noise-plus-interference reference added
    to the interferer span of every source.  Success per source means
    SI-SIR > 0 dB.
    """
    perm = resolve_permutation(references, estimates)
    sdr, sir = [], []
    for j, est in enumerate(estimates):
        ref = references[perm[j]]
        others = [references[i] for i in range(len(references)) if i != perm[j]]
        if residual is not None:
            others = others + [residual]
        sdr.append(si_sdr(ref, est))
        sir.append(si_sir(ref, others, est))
    return MetricReport(
        si_sdr=sdr,
        si_sir=sir,
        permutation=perm,
        success=[s > 0.0 for s in sir],
    )
