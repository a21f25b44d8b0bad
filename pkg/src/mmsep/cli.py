"""Command line interface: simulate, separate, bench, eval."""

import argparse
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .algorithms import ALGORITHMS, SeparatorConfig, pca_whiten, project_back, separate
from .evaluate import evaluate_separation
from .harness import ExperimentConfig, MixSpec, gen_mixture, run_experiment
from .model import ContrastModel
from .stft import StftConfig, analyze, read_wav, synthesize, write_wav


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="generate a synthetic mixture")
    p.add_argument("--mics", type=int, default=4)
    p.add_argument("--targets", type=int, default=2)
    p.add_argument("--interferers", type=int, default=8)
    p.add_argument("--bins", type=int, default=None,
                   help="frequency bins (tensor output only)")
    p.add_argument("--nfft", type=int, default=None,
                   help="derive bins from an FFT size and also write WAV files")
    p.add_argument("--frames", type=int, default=256)
    p.add_argument("--sinr", type=float, default=10.0)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--noise-fraction", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fs", type=int, default=16000)
    p.add_argument("--out", type=Path, required=True, help="output directory")


def _add_separate(sub):
    p = sub.add_parser("separate", help="separate a multichannel WAV file")
    p.add_argument("input", type=Path)
    p.add_argument("--algo", default="auxiva-ip2",
                   choices=sorted(ALGORITHMS) + ["overiva-dx/bg"])
    p.add_argument("--n-src", type=int, default=None)
    p.add_argument("--n-iter", type=int, default=100)
    p.add_argument("--nfft", type=int, default=4096)
    p.add_argument("--hop", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--contrast", default="laplace", choices=["laplace", "logcosh"])
    p.add_argument("--out", type=Path, required=True, help="output directory")


def _add_bench(sub):
    p = sub.add_parser("bench", help="run a benchmark grid from a JSON config")
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, default=None, help="override output directory")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--no-figures", action="store_true")


def _add_eval(sub):
    p = sub.add_parser("eval", help="score estimates against references")
    p.add_argument("--ref", type=Path, required=True, help="reference WAV (K channels)")
    p.add_argument("--est", type=Path, required=True, help="estimate WAV (K channels)")
    p.add_argument("--mix", type=Path, default=None,
                   help="mixture WAV; channel 1 minus references forms a residual")
    p.add_argument("--trim", type=int, default=0, help="samples dropped at each edge")
    p.add_argument("--out", type=Path, default=None, help="metrics JSON (default stdout)")


def _as_channels(data):
    return data[:, None] if data.ndim == 1 else data


def cmd_simulate(args):
    if (args.bins is None) == (args.nfft is None):
        raise SystemExit("specify exactly one of --bins or --nfft")
    n_bins = args.nfft // 2 + 1 if args.nfft else args.bins
    spec = MixSpec(
        n_mics=args.mics,
        n_targets=args.targets,
        n_interferers=args.interferers,
        n_bins=n_bins,
        n_frames=args.frames,
        sinr_db=None if args.noiseless else args.sinr,
        noise_fraction=args.noise_fraction,
        seed=args.seed,
    )
    mixture = gen_mixture(spec)
    args.out.mkdir(parents=True, exist_ok=True)
    np.savez(
        args.out / "mixture.npz",
        X=mixture.X,
        images=mixture.images,
        sources=mixture.sources,
        mixing=mixture.mixing,
        spec=json.dumps(asdict(spec)),
    )
    written = [str(args.out / "mixture.npz")]
    if args.nfft:
        cfg = StftConfig(nfft=args.nfft, sample_rate=args.fs)
        mix_wav = synthesize(mixture.X, cfg)
        peak = np.max(np.abs(mix_wav)) or 1.0
        write_wav(args.out / "mixture.wav", mix_wav / (1.05 * peak), rate=args.fs)
        refs = synthesize(mixture.images, cfg)
        write_wav(args.out / "references.wav", refs / (1.05 * peak), rate=args.fs)
        written += [str(args.out / "mixture.wav"), str(args.out / "references.wav")]
    print("\n".join(written))


def cmd_separate(args):
    rate, data = read_wav(args.input)
    data = _as_channels(data)
    cfg = StftConfig(nfft=args.nfft, hop=args.hop, sample_rate=rate)
    X = analyze(data, cfg)
    n_src = args.n_src if args.n_src is not None else data.shape[1]
    Xw, T = pca_whiten(X)
    sep = SeparatorConfig(
        algorithm=args.algo,
        n_src=n_src,
        n_iter=args.n_iter,
        contrast=ContrastModel(args.contrast),
        tol=args.tol,
        seed=args.seed,
    )
    Y, report = separate(Xw, sep)
    Yb = project_back(Y, report.demixing, T, report.selected)
    waves = synthesize(Yb, cfg, length=data.shape[0])

    args.out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in range(n_src):
        path = args.out / f"source_{k + 1}.wav"
        write_wav(path, waves[:, k], rate=rate)
        paths.append(str(path))
    payload = {
        "algorithm": report.algorithm,
        "n_src": n_src,
        "n_iter": report.n_iterations,
        "nfft": cfg.nfft,
        "hop": cfg.hop,
        "seed": args.seed,
        "selected": list(report.selected),
        "cost_trace": report.cost_trace,
        "head_trace": report.head_trace,
        "wall_ms": report.wall_ms,
        "outputs": paths,
    }
    with open(args.out / "report.json", "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
    print(args.out / "report.json")


def cmd_bench(args):
    cfg = ExperimentConfig.from_json(args.config)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.no_figures:
        overrides["figures"] = False
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    out = run_experiment(cfg)
    print(out / "results.csv")


def cmd_eval(args):
    _, refs = read_wav(args.ref)
    _, ests = read_wav(args.est)
    refs, ests = _as_channels(refs), _as_channels(ests)
    n = min(refs.shape[0], ests.shape[0])
    lo, hi = args.trim, n - args.trim
    if hi <= lo:
        raise SystemExit("trim removed the whole signal")
    refs, ests = refs[lo:hi], ests[lo:hi]
    residual = None
    if args.mix is not None:
        _, mix = read_wav(args.mix)
        residual = _as_channels(mix)[lo:hi, 0] - refs.sum(axis=1)
    report = evaluate_separation(
        [refs[:, k] for k in range(refs.shape[1])],
        [ests[:, k] for k in range(ests.shape[1])],
        residual,
    )
    payload = {
        "si_sdr": report.si_sdr,
        "si_sir": report.si_sir,
        "permutation": list(report.permutation),
        "success": report.success,
    }
    text = json.dumps(payload, indent=1, sort_keys=True)
    if args.out is None:
        print(text)
    else:
        args.out.write_text(text + "\n")
        print(args.out)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mmsep",
        description="Blind source separation/extraction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_separate(sub)
    _add_bench(sub)
    _add_eval(sub)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    commands = {
        "simulate": cmd_simulate,
        "separate": cmd_separate,
        "bench": cmd_bench,
        "eval": cmd_eval,
    }
    commands[args.command](args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
