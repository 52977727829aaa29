"""Log-mel feature extraction for the acoustic model.

Hann-windowed frames, power spectrum over a zero-padded real FFT, triangular
mel filterbank (HTK mel scale), log floor 1e-10. Mean/variance normalization
uses statistics computed once over the training corpus and stored with the
model so inference sees the same distribution.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import AudioBuffer
from .errors import DimensionMismatch, TooShort

LOG_FLOOR = 1e-10
STD_FLOOR = 1e-8


@dataclass
class FeatureConfig:
    win_ms: float = 25.0
    hop_ms: float = 10.0
    n_fft: int | None = None  # None: smallest power of two >= window length
    n_mels: int = 40
    fmin_hz: float = 0.0
    fmax_hz: float | None = None  # None: sample_rate / 2

    def __post_init__(self):
        if self.hop_ms > self.win_ms:
            raise ValueError("hop_ms must not exceed win_ms")
        if self.n_mels < 1:
            raise ValueError("n_mels must be positive")

    def window_samples(self, rate: int) -> int:
        return int(round(self.win_ms * rate / 1000.0))

    def hop_samples(self, rate: int) -> int:
        return int(round(self.hop_ms * rate / 1000.0))

    def fft_size(self, rate: int) -> int:
        if self.n_fft is not None:
            w = self.window_samples(rate)
            if self.n_fft < w or self.n_fft & (self.n_fft - 1):
                raise ValueError("n_fft must be a power of two >= window length")
            return self.n_fft
        n = 1
        while n < self.window_samples(rate):
            n *= 2
        return n

    def fmax(self, rate: int) -> float:
        fmax = self.fmax_hz if self.fmax_hz is not None else rate / 2.0
        if not self.fmin_hz < fmax <= rate / 2.0:
            raise ValueError("need fmin < fmax <= sample_rate/2")
        return fmax

    def to_dict(self) -> dict:
        return {
            "win_ms": self.win_ms,
            "hop_ms": self.hop_ms,
            "n_fft": self.n_fft,
            "n_mels": self.n_mels,
            "fmin_hz": self.fmin_hz,
            "fmax_hz": self.fmax_hz,
        }


@dataclass
class FeatureMatrix:
    """frames: (T, n_mels) array; one row per analysis frame."""

    frames: np.ndarray
    frame_rate_hz: float

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


def mel_scale(hz: float) -> float:
    """HTK mel: 2595 * log10(1 + hz / 700)."""
    return 2595.0 * np.log10(1.0 + hz / 700.0)


def mel_to_hz(mel: float) -> float:
    return 700.0 * (10.0 ** (mel / 2595.0) - 1.0)


def frame_signal(audio: AudioBuffer, cfg: FeatureConfig) -> np.ndarray:
    """Slice audio into Hann-windowed frames, shape (T, W).

    T = 1 + floor((N - W) / H); trailing samples short of a full window are
    dropped.
    """
    w = cfg.window_samples(audio.sample_rate_hz)
    h = cfg.hop_samples(audio.sample_rate_hz)
    n = len(audio)
    if n < w:
        raise TooShort(f"{n} samples, window needs {w}")
    t = 1 + (n - w) // h
    window = np.hanning(w)
    frames = np.empty((t, w))
    for i in range(t):
        frames[i] = audio.samples[i * h : i * h + w] * window
    return frames


def mel_filterbank(rate: int, cfg: FeatureConfig) -> np.ndarray:
    """Triangular filters, shape (n_mels, n_fft//2 + 1).

    Filter centers are equally spaced on the mel scale between fmin and fmax;
    weights are evaluated at exact bin frequencies so every bin strictly
    inside (fmin, fmax) lands on at least one triangle.
    """
    n_fft = cfg.fft_size(rate)
    fmax = cfg.fmax(rate)
    mel_points = np.linspace(mel_scale(cfg.fmin_hz), mel_scale(fmax), cfg.n_mels + 2)
    hz_points = np.array([mel_to_hz(m) for m in mel_points])
    bin_freqs = np.arange(n_fft // 2 + 1) * rate / n_fft
    fb = np.zeros((cfg.n_mels, n_fft // 2 + 1))
    for m in range(cfg.n_mels):
        left, center, right = hz_points[m : m + 3]
        up = (bin_freqs - left) / (center - left)
        down = (right - bin_freqs) / (right - center)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def log_mel(audio: AudioBuffer, cfg: FeatureConfig) -> FeatureMatrix:
    """Log mel-filterbank energies, shape (T, n_mels)."""
    frames = frame_signal(audio, cfg)
    n_fft = cfg.fft_size(audio.sample_rate_hz)
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    fb = mel_filterbank(audio.sample_rate_hz, cfg)
    energies = power @ fb.T
    rate = audio.sample_rate_hz
    return FeatureMatrix(
        np.log(energies + LOG_FLOOR),
        frame_rate_hz=rate / cfg.hop_samples(rate),
    )


@dataclass
class FeatureStats:
    """Per-dimension mean/std over a training corpus."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_matrices(cls, matrices: list[FeatureMatrix]) -> "FeatureStats":
        stacked = np.concatenate([m.frames for m in matrices], axis=0)
        return cls(stacked.mean(axis=0), np.maximum(stacked.std(axis=0), STD_FLOOR))


def normalize(features: FeatureMatrix, stats: FeatureStats) -> FeatureMatrix:
    """(x - mean) / std per dimension."""
    if features.dim != stats.mean.shape[0]:
        raise DimensionMismatch(
            f"features have dim {features.dim}, stats have dim {stats.mean.shape[0]}"
        )
    return FeatureMatrix((features.frames - stats.mean) / stats.std, features.frame_rate_hz)


def dump_csv(features: FeatureMatrix) -> str:
    """Debug dump, one frame per row."""
    return "\n".join(",".join(repr(v) for v in row) for row in features.frames) + "\n"
