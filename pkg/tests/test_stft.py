"""Analysis/synthesis contracts: reconstruction, energy, linearity, WAV I/O."""

import numpy as np
import pytest

from mmsep.errors import ShapeMismatch, SignalTooShort
from mmsep.stft import StftConfig, analyze, read_wav, synthesize, write_wav

SMALL = StftConfig(nfft=256)


class TestConfig:
    def test_defaults(self):
        cfg = StftConfig()
        assert cfg.nfft == 4096 and cfg.hop == 1024
        assert cfg.n_bins == 2049

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            StftConfig(nfft=1000)

    def test_rejects_bad_hop(self):
        with pytest.raises(ValueError):
            StftConfig(nfft=256, hop=100)

    def test_rejects_unknown_window(self):
        with pytest.raises(ValueError):
            StftConfig(window="hann")


class TestAnalyze:
    def test_tone_energy_concentrates_at_its_bin(self):
        # A Hamming window spreads a bin-centered tone over a 3-bin main
        # lobe; that lobe must hold nearly all of the frame energy.
        cfg = SMALL
        bin_idx = 32
        t = np.arange(cfg.nfft * 8)
        tone = np.cos(2 * np.pi * bin_idx * t / cfg.nfft)
        X = analyze(tone, cfg)
        frame = X[:, 2, 0]
        weights = np.ones(cfg.n_bins)
        weights[1:-1] = 2.0  # one-sided spectrum accounting
        energy = weights * np.abs(frame) ** 2
        lobe = energy[bin_idx - 1 : bin_idx + 2].sum()
        assert lobe / energy.sum() > 0.95

    def test_zero_signal(self):
        X = analyze(np.zeros(1024), SMALL)
        assert X.shape[0] == SMALL.n_bins
        assert np.all(X == 0)

    def test_signal_too_short(self):
        with pytest.raises(SignalTooShort):
            analyze(np.zeros(255), SMALL)

    def test_parseval_per_frame(self):
        # One-sided bin energies weighted for conjugate symmetry match the
        # windowed frame energy computed directly.
        rng = np.random.default_rng(11)
        cfg = SMALL
        sig = rng.standard_normal(cfg.nfft * 4)
        X = analyze(sig, cfg)
        win = cfg.analysis_window()
        weights = np.ones(cfg.n_bins)
        weights[1:-1] = 2.0
        for n in range(4):
            frame = sig[n * cfg.hop : n * cfg.hop + cfg.nfft] * win
            direct = np.sum(frame**2)
            spectral = np.sum(weights * np.abs(X[:, n, 0]) ** 2) / cfg.nfft
            assert abs(spectral - direct) / direct < 1e-6

    def test_linearity(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal(1500)
        y = rng.standard_normal(1500)
        lhs = analyze(1.7 * x - 0.3 * y, SMALL)
        rhs = 1.7 * analyze(x, SMALL) - 0.3 * analyze(y, SMALL)
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(rhs)))


class TestSynthesize:
    @pytest.mark.parametrize("seed", range(3))
    def test_round_trip_interior(self, seed):
        rng = np.random.default_rng(20 + seed)
        cfg = SMALL
        sig = rng.standard_normal(16000)
        rec = synthesize(analyze(sig, cfg), cfg, length=len(sig))[:, 0]
        core = slice(cfg.nfft, len(sig) - cfg.nfft)
        err = np.linalg.norm(rec[core] - sig[core]) / np.linalg.norm(sig[core])
        assert err < 1e-10

    def test_zero_tensor(self):
        out = synthesize(np.zeros((SMALL.n_bins, 4, 2), dtype=complex), SMALL)
        assert np.all(out == 0)

    def test_multichannel_order_preserved(self):
        rng = np.random.default_rng(30)
        sig = rng.standard_normal((8000, 3)) * np.array([1.0, 2.0, 3.0])
        rec = synthesize(analyze(sig, SMALL), SMALL, length=8000)
        core = slice(SMALL.nfft, 8000 - SMALL.nfft)
        for ch in range(3):
            err = np.linalg.norm(rec[core, ch] - sig[core, ch])
            assert err < 1e-10 * np.linalg.norm(sig[core, ch])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            synthesize(np.zeros((7, 4), dtype=complex), SMALL)

    def test_default_config_round_trip(self):
        rng = np.random.default_rng(31)
        cfg = StftConfig()  # 4096, 3/4 overlap
        sig = rng.standard_normal(16000)
        rec = synthesize(analyze(sig, cfg), cfg, length=len(sig))[:, 0]
        core = slice(cfg.nfft, len(sig) - cfg.nfft)
        err = np.linalg.norm(rec[core] - sig[core]) / np.linalg.norm(sig[core])
        assert err < 1e-10


class TestWav:
    def test_float32_round_trip(self, tmp_path):
        rng = np.random.default_rng(40)
        sig = 0.5 * rng.standard_normal((2000, 2))
        path = tmp_path / "x.wav"
        write_wav(path, sig, rate=16000)
        rate, back = read_wav(path)
        assert rate == 16000
        np.testing.assert_allclose(back, sig, atol=1e-7)

    def test_pcm16_round_trip(self, tmp_path):
        rng = np.random.default_rng(41)
        sig = rng.uniform(-0.9, 0.9, size=2000)
        path = tmp_path / "x16.wav"
        write_wav(path, sig, rate=8000, dtype="pcm16")
        rate, back = read_wav(path)
        assert rate == 8000
        np.testing.assert_allclose(back, sig, atol=1.0 / 32768)
