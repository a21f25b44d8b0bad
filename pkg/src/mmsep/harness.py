"""Synthetic mixture simulator, experiment runner, and result sinks.

Mixtures are generated directly in the frequency domain: one random
instantaneous mixing matrix per bin, spherical super-Gaussian targets
with a per-frame radius shared across bins, a low-rank Gaussian
background, and a small uncorrelated noise floor.  This is exactly the
model under which the separation guarantees hold, so property checks
stay clean.  Metrics are computed on the (flattened) frequency-domain
signals; see the CLI for the time-domain WAV path.
"""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .algorithms import SeparatorConfig, pca_whiten, project_back, separate
from .errors import InfeasibleSINR
from .evaluate import evaluate_separation
from .model import ContrastModel

CSV_COLUMNS = [
    "algorithm",
    "K",
    "M",
    "SINR",
    "seed",
    "iteration",
    "cost",
    "si_sdr",
    "si_sir",
    "wall_ms",
    "si_sir_min",
    "success",
]

_MIXING_COND_CAP = 100.0


@dataclass(frozen=True)
class MixSpec:
    """Synthetic mixture description.

    ``sinr_db=None`` generates a noiseless mixture (targets only).  The
    uncorrelated noise floor takes ``noise_fraction`` of the total
    noise-and-interference power when interferers are present.
    """

    n_mics: int = 4
    n_targets: int = 2
    n_interferers: int = 8
    n_bins: int = 32
    n_frames: int = 256
    sinr_db: float | None = 10.0
    noise_fraction: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.n_targets <= self.n_mics:
            raise ValueError(f"need 0 < K <= M, got K={self.n_targets} M={self.n_mics}")
        if self.n_interferers < 0 or self.n_bins < 1 or self.n_frames < 1:
            raise ValueError("n_interferers, n_bins, n_frames must be nonnegative/positive")
        if not 0.0 < self.noise_fraction <= 1.0:
            raise ValueError(f"noise_fraction must lie in (0, 1], got {self.noise_fraction}")


@dataclass
class Mixture:
    """Generated data: mixture tensor, mic-1 source images, ground truth."""

    X: np.ndarray        # (F, N, M)
    images: np.ndarray   # (F, N, K) target images at microphone 1
    sources: np.ndarray  # (F, N, K)
    mixing: np.ndarray   # (F, M, K)

    @property
    def residual(self):
        """Noise-plus-interference at microphone 1."""
        return self.X[:, :, 0] - self.images.sum(axis=2)


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _cap_condition(mats, cap=_MIXING_COND_CAP):
    """Floor singular values at max/cap, per matrix in the stack."""
    u, s, vh = np.linalg.svd(mats, full_matrices=False)
    s = np.maximum(s, s[..., :1] / cap)
    return u @ (s[..., None] * vh)


def _draw_sources(rng, n_bins, n_frames, n_targets):
    S = np.empty((n_bins, n_frames, n_targets), dtype=complex)
    # E[radius^2] = F so each bin entry has unit average variance.
    scale = math.sqrt(n_bins / 2.0)
    for k in range(n_targets):
        direction = _complex_normal(rng, (n_bins, n_frames))
        norms = np.linalg.norm(direction, axis=0)
        radius = rng.exponential(scale=scale, size=n_frames)
        S[:, :, k] = direction / norms * radius
    return S


def gen_sources(spec):
    """Spherical super-Gaussian target spectra, shape ``(F, N, K)``.

    Each frame vector has a uniformly random direction across bins and an
    exponentially distributed radius, normalized to unit average variance
    per bin.
    """
    rng = np.random.default_rng(spec.seed)
    return _draw_sources(rng, spec.n_bins, spec.n_frames, spec.n_targets)


def gen_mixture(spec):
    """Generate one synthetic mixture matching the requested SINR exactly.

    Target/interference/noise powers are measured at microphone 1 and
    rescaled so ``K sigma_T^2 / (Q sigma_I^2 + sigma_w^2)`` equals the
    requested ratio.

    Raises
    ------
    InfeasibleSINR
        If interferers are requested but no background dimensions exist.
    """
    rng = np.random.default_rng(spec.seed)
    n_bins, n_frames = spec.n_bins, spec.n_frames
    n_mics, n_targets = spec.n_mics, spec.n_targets

    S = _draw_sources(rng, n_bins, n_frames, n_targets)
    A = _cap_condition(_complex_normal(rng, (n_bins, n_mics, n_targets)))

    # Unit per-target power at microphone 1 (sigma_T^2 = 1).
    target_terms = A[:, None, :, :] * S[:, :, None, :]  # (F, N, M, K)
    for k in range(n_targets):
        power = np.mean(np.abs(target_terms[:, :, 0, k]) ** 2)
        gain = 1.0 / math.sqrt(power)
        A[:, :, k] *= gain
        target_terms[:, :, :, k] *= gain
    X = target_terms.sum(axis=3)
    images = A[:, 0:1, :] * S

    if spec.sinr_db is None or math.isinf(spec.sinr_db):
        return Mixture(X=X, images=images, sources=S, mixing=A)

    budget = n_targets / (10.0 ** (spec.sinr_db / 10.0))
    rank = min(spec.n_interferers, n_mics - n_targets)
    if spec.n_interferers > 0:
        if rank == 0:
            raise InfeasibleSINR(
                f"{spec.n_interferers} interferers requested with no background "
                f"dimensions (K={n_targets}, M={n_mics})"
            )
        noise_power = spec.noise_fraction * budget
        interference_power = budget - noise_power
    else:
        noise_power = budget
        interference_power = 0.0

    if interference_power > 0.0:
        psi = _complex_normal(rng, (n_bins, n_mics, rank))
        z = _complex_normal(rng, (n_bins, n_frames, rank))
        background = z @ psi.transpose(0, 2, 1)  # (F, N, M)
        realized = np.mean(np.abs(background[:, :, 0]) ** 2)
        background *= math.sqrt(interference_power / realized)
        X = X + background

    noise = _complex_normal(rng, (n_bins, n_frames, n_mics))
    realized = np.mean(np.abs(noise[:, :, 0]) ** 2)
    noise *= math.sqrt(noise_power / realized)
    X = X + noise

    return Mixture(X=X, images=images, sources=S, mixing=A)


def achieved_sinr_db(mixture):
    """Measured SINR at microphone 1 of a generated mixture."""
    target = np.mean(np.abs(mixture.images) ** 2) * mixture.images.shape[2]
    rest = np.mean(np.abs(mixture.residual) ** 2)
    return 10.0 * math.log10(target / rest)


@dataclass(frozen=True)
class ExperimentConfig:
    """Batch description: mixes x algorithms x seeds.

    ``seeds`` overrides each mix's own seed to form the grid; leave empty
    to run each mix exactly once with its stored seed.  ``metrics_every``
    > 0 evaluates metrics every that many iterations (costly), otherwise
    only the final output is scored.
    """

    mixes: tuple
    algorithms: tuple
    seeds: tuple = ()
    metrics_every: int = 0
    output_dir: str = "results"
    workers: int = 1
    figures: bool = True

    @classmethod
    def from_dict(cls, raw):
        mixes = tuple(MixSpec(**m) for m in raw.get("mixes", []))
        algos = []
        for a in raw.get("algorithms", []):
            a = dict(a)
            if "contrast" in a:
                c = a["contrast"]
                a["contrast"] = ContrastModel(**c) if isinstance(c, dict) else ContrastModel(c)
            algos.append(SeparatorConfig(**a))
        keys = {"seeds", "metrics_every", "output_dir", "workers", "figures"}
        rest = {k: v for k, v in raw.items() if k in keys}
        if "seeds" in rest:
            rest["seeds"] = tuple(rest["seeds"])
        return cls(mixes=mixes, algorithms=tuple(algos), **rest)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class RunRecord:
    """Deterministic payload of one run plus wall-clock timings."""

    algorithm: str
    mix: dict
    seed: int
    cost_trace: list
    head_trace: list
    si_sdr: list
    si_sir: list
    permutation: tuple
    success: list
    iter_metrics: list  # (iteration, mean si_sdr, mean si_sir, min si_sir)
    wall_ms: list

    def to_json_dict(self):
        """JSON payload; excludes wall times so reruns are byte-identical."""
        payload = asdict(self)
        payload.pop("wall_ms")
        payload["permutation"] = list(self.permutation)
        return payload


def run_single(mix, sep, metrics_every=0):
    """Simulate, whiten, separate, project back, and score one run."""
    mixture = gen_mixture(mix)
    Xw, T = pca_whiten(mixture.X)
    references = [mixture.images[:, :, k] for k in range(mix.n_targets)]
    residual = mixture.residual

    iter_metrics = []
    if metrics_every > 0:

        def on_iteration(it, Yfull, W):
            if it % metrics_every:
                return
            powers = np.einsum("fnm,fnm->m", Yfull.conj(), Yfull).real
            n_rows = W.shape[1]
            if sep.algorithm.startswith("auxiva") or (sep.n_src or n_rows) == n_rows:
                sel = tuple(
                    int(i) for i in np.argsort(-powers, kind="stable")[: mix.n_targets]
                )
            else:
                sel = tuple(range(mix.n_targets))
            Yb = project_back(Yfull[:, :, list(sel)], W, T, sel)
            scored = evaluate_separation(
                references, [Yb[:, :, j] for j in range(mix.n_targets)], residual
            )
            iter_metrics.append(
                (
                    it,
                    float(np.mean(scored.si_sdr)),
                    float(np.mean(scored.si_sir)),
                    float(np.min(scored.si_sir)),
                )
            )

        callback = on_iteration
    else:
        callback = None

    n_src = sep.n_src if sep.n_src is not None else mix.n_targets
    Y, report = separate(Xw, replace(sep, n_src=n_src), callback=callback)
    Yb = project_back(Y, report.demixing, T, report.selected)
    scored = evaluate_separation(
        references, [Yb[:, :, j] for j in range(mix.n_targets)], residual
    )
    return RunRecord(
        algorithm=report.algorithm,
        mix=asdict(mix),
        seed=mix.seed,
        cost_trace=report.cost_trace,
        head_trace=report.head_trace,
        si_sdr=scored.si_sdr,
        si_sir=scored.si_sir,
        permutation=scored.permutation,
        success=scored.success,
        iter_metrics=iter_metrics,
        wall_ms=report.wall_ms,
    )


def _job(args):
    mix, sep, metrics_every = args
    try:
        return run_single(mix, sep, metrics_every)
    except Exception as exc:  # failures are recorded, the batch continues
        return (mix, sep, repr(exc))


def _record_rows(record):
    mix = record.mix
    sinr = mix["sinr_db"]
    base = {
        "algorithm": record.algorithm,
        "K": mix["n_targets"],
        "M": mix["n_mics"],
        "SINR": "" if sinr is None else sinr,
        "seed": record.seed,
    }
    by_iter = {it: (sdr, sir, sir_min) for it, sdr, sir, sir_min in record.iter_metrics}
    last = len(record.cost_trace) - 1
    rows = []
    for it, cost in enumerate(record.cost_trace):
        row = dict(base)
        row["iteration"] = it
        row["cost"] = cost
        row["wall_ms"] = record.wall_ms[it - 1] if it > 0 else ""
        if it == last:
            sdr, sir, sir_min = (
                float(np.mean(record.si_sdr)),
                float(np.mean(record.si_sir)),
                float(np.min(record.si_sir)),
            )
        elif it in by_iter:
            sdr, sir, sir_min = by_iter[it]
        else:
            rows.append({**row, "si_sdr": "", "si_sir": "", "si_sir_min": "", "success": ""})
            continue
        row["si_sdr"] = sdr
        row["si_sir"] = sir
        row["si_sir_min"] = sir_min
        row["success"] = int(sir_min > 0.0) if it == last else ""
        rows.append(row)
    return rows


def run_experiment(cfg):
    """Run the full grid and write JSON records, CSV rows, and figures.

    Returns the output directory as a :class:`pathlib.Path`.  Per-run
    failures are recorded in ``failures.json`` and the batch continues.
    """
    out = Path(cfg.output_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)

    jobs = []
    for mix in cfg.mixes:
        seeds = cfg.seeds if cfg.seeds else (mix.seed,)
        for sep in cfg.algorithms:
            for seed in seeds:
                jobs.append((replace(mix, seed=seed), sep, cfg.metrics_every))

    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]

    rows, failures = [], []
    for idx, res in enumerate(results):
        if isinstance(res, tuple):
            mix, sep, err = res
            failures.append(
                {"mix": asdict(mix), "algorithm": sep.algorithm, "error": err}
            )
            continue
        rows.extend(_record_rows(res))
        name = f"run_{idx:04d}_{res.algorithm}_seed{res.seed}.json"
        with open(out / "runs" / name, "w") as fh:
            json.dump(res.to_json_dict(), fh, sort_keys=True, indent=1)

    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)

    _write_summary(rows, out / "summary.csv")
    if failures:
        with open(out / "failures.json", "w") as fh:
            json.dump(failures, fh, sort_keys=True, indent=1)

    if cfg.figures and rows:
        from . import figures

        figures.render_all(rows, out / "figures")
    return out


def _write_summary(rows, path):
    """Per-(algorithm, K, M, SINR) medians and success rate."""
    groups = {}
    for row in rows:
        if row["success"] == "":
            continue
        key = (row["algorithm"], row["K"], row["M"], row["SINR"])
        groups.setdefault(key, []).append(row)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["algorithm", "K", "M", "SINR", "n_runs",
             "median_si_sdr", "median_si_sir", "success_rate"]
        )
        for key in sorted(groups, key=str):
            final = groups[key]
            writer.writerow(
                [
                    *key,
                    len(final),
                    float(np.median([r["si_sdr"] for r in final])),
                    float(np.median([r["si_sir"] for r in final])),
                    float(np.mean([r["success"] for r in final])),
                ]
            )
