"""Blind source separation and extraction with closed-form MM updates."""

from .algorithms import (
    ALGORITHMS,
    SeparationReport,
    SeparatorConfig,
    pca_whiten,
    project_back,
    separate,
)
from .evaluate import MetricReport, evaluate_separation, resolve_permutation, si_sdr, si_sir
from .harness import ExperimentConfig, MixSpec, gen_mixture, gen_sources, run_experiment
from .model import ContrastModel, SubspacePartition
from .stft import StftConfig, analyze, read_wav, synthesize, write_wav

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "ContrastModel",
    "ExperimentConfig",
    "MetricReport",
    "MixSpec",
    "SeparationReport",
    "SeparatorConfig",
    "StftConfig",
    "SubspacePartition",
    "analyze",
    "evaluate_separation",
    "gen_mixture",
    "gen_sources",
    "pca_whiten",
    "project_back",
    "read_wav",
    "resolve_permutation",
    "run_experiment",
    "separate",
    "si_sdr",
    "si_sir",
    "synthesize",
    "write_wav",
]
