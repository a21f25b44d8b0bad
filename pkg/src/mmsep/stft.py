"""Hamming-window STFT analysis and synthesis, plus WAV file I/O.

Spectral tensors are complex arrays of shape ``(n_bins, n_frames,
n_channels)``.  Synthesis uses the canonical dual of the analysis window,
so the analysis/synthesis round trip is exact away from the first and
last ``nfft`` samples.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.io import wavfile

from .errors import ShapeMismatch, SignalTooShort


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters: FFT size, hop, window type, sample rate.

    ``hop=None`` selects the default 3/4 overlap (``nfft // 4``).
    """

    nfft: int = 4096
    hop: int | None = None
    window: str = "hamming"
    sample_rate: int = 16000

    def __post_init__(self):
        if self.nfft <= 0 or self.nfft & (self.nfft - 1):
            raise ValueError(f"nfft must be a positive power of two, got {self.nfft}")
        if self.hop is None:
            object.__setattr__(self, "hop", self.nfft // 4)
        if self.hop <= 0 or self.nfft % self.hop:
            raise ValueError(f"hop must divide nfft, got hop={self.hop} nfft={self.nfft}")
        if self.window != "hamming":
            raise ValueError(f"unsupported window {self.window!r}")

    @property
    def n_bins(self):
        return self.nfft // 2 + 1

    def analysis_window(self):
        return np.hamming(self.nfft)

    def synthesis_window(self):
        """Canonical dual window: exact overlap-add inverse of the analysis."""
        win = self.analysis_window()
        power = win**2
        # Periodized window energy, period = hop.
        per_phase = power.reshape(self.nfft // self.hop, self.hop).sum(axis=0)
        return win / np.tile(per_phase, self.nfft // self.hop)


def analyze(signal, cfg=StftConfig()):
    """STFT of a mono ``(T,)`` or multichannel ``(T, M)`` waveform.

    Returns a complex tensor of shape ``(n_bins, n_frames, n_channels)``.
    Frames start at multiples of the hop; the tail is zero-padded to
    complete the last frame.
    """
    signal = np.asarray(signal, dtype=float)
    mono = signal.ndim == 1
    if mono:
        signal = signal[:, None]
    n_samples = signal.shape[0]
    if n_samples < cfg.nfft:
        raise SignalTooShort(f"need at least {cfg.nfft} samples, got {n_samples}")

    n_frames = 1 + int(np.ceil((n_samples - cfg.nfft) / cfg.hop))
    padded_len = (n_frames - 1) * cfg.hop + cfg.nfft
    if padded_len > n_samples:
        pad = np.zeros((padded_len - n_samples, signal.shape[1]))
        signal = np.concatenate([signal, pad], axis=0)

    # (n_frames, n_channels, nfft)
    frames = sliding_window_view(signal, cfg.nfft, axis=0)[:: cfg.hop]
    spectra = np.fft.rfft(frames * cfg.analysis_window(), axis=-1)
    # -> (n_bins, n_frames, n_channels)
    return spectra.transpose(2, 0, 1)


def synthesize(tensor, cfg=StftConfig(), length=None):
    """Overlap-add inverse of :func:`analyze`.

    ``tensor`` has shape ``(n_bins, n_frames)`` or ``(n_bins, n_frames,
    n_channels)``.  If ``length`` is given the output is truncated (or
    zero-padded) to that many samples.
    """
    tensor = np.asarray(tensor, dtype=complex)
    mono = tensor.ndim == 2
    if mono:
        tensor = tensor[:, :, None]
    if tensor.ndim != 3 or tensor.shape[0] != cfg.n_bins:
        raise ShapeMismatch(
            f"expected ({cfg.n_bins}, n_frames, n_channels), got {tensor.shape}"
        )

    n_bins, n_frames, n_chan = tensor.shape
    dual = cfg.synthesis_window()
    # (n_frames, n_channels, nfft)
    blocks = np.fft.irfft(tensor.transpose(1, 2, 0), n=cfg.nfft, axis=-1)
    blocks *= dual

    total = (n_frames - 1) * cfg.hop + cfg.nfft
    out = np.zeros((total, n_chan))
    for frame in range(n_frames):
        start = frame * cfg.hop
        out[start : start + cfg.nfft] += blocks[frame].T

    if length is not None:
        if length <= total:
            out = out[:length]
        else:
            out = np.concatenate([out, np.zeros((length - total, n_chan))], axis=0)
    return out[:, 0] if mono else out


def read_wav(path):
    """Read a PCM16 or float32 WAV file as float64 in [-1, 1].

    Returns ``(rate, samples)`` with ``samples`` of shape ``(T,)`` or
    ``(T, M)``.
    """
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        data = data.astype(float) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(float) / 2147483648.0
    else:
        data = data.astype(float)
    return rate, data


def write_wav(path, samples, rate=16000, dtype="float32"):
    """Write a waveform as float32 (default) or PCM16 WAV."""
    samples = np.asarray(samples, dtype=float)
    if dtype == "float32":
        wavfile.write(path, rate, samples.astype(np.float32))
    elif dtype == "pcm16":
        clipped = np.clip(samples, -1.0, 32767.0 / 32768.0)
        wavfile.write(path, rate, np.round(clipped * 32768.0).astype(np.int16))
    else:
        raise ValueError(f"unsupported dtype {dtype!r}")
