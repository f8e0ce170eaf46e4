"""Power STFT, HTK mel filterbank, log compression and [-1, 1] scaling.

Framing never centers: frame ``m`` covers samples ``[m*hop, m*hop + win)``,
so ``n_frames = 1 + (N - win) // hop`` and frame times map exactly onto
capture times. The analysis window is a periodic Hann of ``win_length``
samples, zero-padded symmetrically to ``n_fft`` when shorter.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .errors import InvalidConfig, TooShort


@dataclass(frozen=True)
class SpecConfig:
    sample_rate_hz: int = 16000
    n_fft: int = 400
    win_length: int = 400
    hop_length: int = 160
    n_mels: int = 64
    power: float = 2.0
    log_floor_eps: float = 1e-10
    mel_fmin_hz: float = 0.0
    mel_fmax_hz: float | None = None  # None -> Nyquist
    # "window": per-spectrogram min/max; "dataset": fixed log range below
    normalization: str = "window"
    dataset_log_range: tuple | None = None

    @property
    def fmax_hz(self):
        return self.sample_rate_hz / 2.0 if self.mel_fmax_hz is None else self.mel_fmax_hz

    @property
    def n_freqs(self):
        return self.n_fft // 2 + 1

    def validate(self):
        if self.sample_rate_hz <= 0 or self.n_fft <= 0:
            raise InvalidConfig("sample_rate_hz and n_fft must be positive")
        if not 0 < self.win_length <= self.n_fft:
            raise InvalidConfig("win_length must lie in (0, n_fft]")
        if self.hop_length <= 0:
            raise InvalidConfig("hop_length must be positive")
        if self.n_mels < 1:
            raise InvalidConfig("n_mels must be at least 1")
        if not 0 <= self.mel_fmin_hz < self.fmax_hz <= self.sample_rate_hz / 2.0:
            raise InvalidConfig("need 0 <= fmin < fmax <= Nyquist")
        if self.normalization not in ("window", "dataset"):
            raise InvalidConfig(f"unknown normalization {self.normalization!r}")
        if self.normalization == "dataset":
            lo, hi = self.dataset_log_range or (None, None)
            if lo is None or not hi > lo:
                raise InvalidConfig("dataset normalization needs dataset_log_range=(lo, hi) with hi > lo")

    def n_frames(self, n_samples):
        if n_samples < self.win_length:
            return 0
        return 1 + (n_samples - self.win_length) // self.hop_length

    def to_dict(self):
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "n_fft": self.n_fft,
            "win_length": self.win_length,
            "hop_length": self.hop_length,
            "n_mels": self.n_mels,
            "power": self.power,
            "log_floor_eps": self.log_floor_eps,
            "mel_fmin_hz": self.mel_fmin_hz,
            "mel_fmax_hz": self.fmax_hz,
            "mel_scale": "htk",
            "window": "hann",
            "normalization": self.normalization,
            "dataset_log_range": list(self.dataset_log_range) if self.dataset_log_range else None,
        }


@dataclass(frozen=True, eq=False)
class Spectrogram:
    values: np.ndarray  # (n_mels, n_frames)
    config: SpecConfig = field(default_factory=SpecConfig)
    t0_s: float = 0.0  # capture time of the centre of frame 0

    @property
    def shape(self):
        return self.values.shape


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=16)
def analysis_window(cfg):
    w = get_window("hann", cfg.win_length, fftbins=True)
    if cfg.win_length < cfg.n_fft:
        left = (cfg.n_fft - cfg.win_length) // 2
        w = np.pad(w, (left, cfg.n_fft - cfg.win_length - left))
    w.setflags(write=False)
    return w


def frame_signal(samples, cfg):
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a one-dimensional buffer")
    if x.shape[0] < cfg.win_length:
        raise TooShort(f"need at least {cfg.win_length} samples, got {x.shape[0]}")
    # frames are n_fft wide; the window is centred in them, so pad the tail
    pad = cfg.n_fft - cfg.win_length
    left = pad // 2
    if pad:
        x = np.pad(x, (left, pad - left))
    n = cfg.n_frames(np.asarray(samples).shape[0])
    return sliding_window_view(x, cfg.n_fft)[:: cfg.hop_length][:n]


def stft(samples, cfg):
    """Complex one-sided STFT, shape (n_fft//2 + 1, n_frames)."""
    cfg.validate()
    frames = frame_signal(samples, cfg) * analysis_window(cfg)
    return np.fft.rfft(frames, n=cfg.n_fft, axis=-1).T


def stft_power(samples, cfg=SpecConfig()):
    spec = np.abs(stft(samples, cfg))
    return spec**2 if cfg.power == 2.0 else spec**cfg.power


@lru_cache(maxsize=16)
def mel_filterbank(cfg=SpecConfig()):
    """Triangular filters with apex 1.0 on the HTK mel axis, (n_mels, n_fft//2 + 1)."""
    cfg.validate()
    mel_pts = np.linspace(hz_to_mel(cfg.mel_fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    freqs = np.arange(cfg.n_freqs) * cfg.sample_rate_hz / cfg.n_fft
    lower, center, upper = hz_pts[:-2, None], hz_pts[1:-1, None], hz_pts[2:, None]
    rising = (freqs - lower) / (center - lower)
    falling = (upper - freqs) / (upper - center)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    if np.any(fb.sum(axis=1) <= 0):
        raise InvalidConfig("some mel filters cover no FFT bin; lower n_mels or raise n_fft")
    fb.setflags(write=False)
    return fb


def mel_center_hz(cfg=SpecConfig()):
    mel_pts = np.linspace(hz_to_mel(cfg.mel_fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mels + 2)
    return mel_to_hz(mel_pts[1:-1])


def log_mel_from_power(power, cfg=SpecConfig()):
    mel = mel_filterbank(cfg) @ power
    return np.log(np.maximum(mel, cfg.log_floor_eps))


def normalize(log_mel, cfg=SpecConfig()):
    if cfg.normalization == "dataset":
        lo, hi = cfg.dataset_log_range
        return np.clip(2.0 * (log_mel - lo) / (hi - lo) - 1.0, -1.0, 1.0)
    lo, hi = log_mel.min(), log_mel.max()
    if hi - lo < 1e-12:
        return np.full_like(log_mel, -1.0)
    return (log_mel - lo) / (hi - lo) * 2.0 - 1.0


def log_mel_normalize(samples, cfg=SpecConfig(), mask_below_hz=None, start_time_s=0.0):
    """Model-input spectrogram for one audio window.

    ``mask_below_hz`` zeroes linear-frequency rows below the cutoff before the
    mel projection (the low-frequency masking baseline).
    """
    power = stft_power(samples, cfg)
    if mask_below_hz is not None:
        from .denoise import mask_below_freq

        power = mask_below_freq(power, cfg, mask_below_hz)
    values = normalize(log_mel_from_power(power, cfg), cfg)
    t0 = start_time_s + cfg.win_length / 2.0 / cfg.sample_rate_hz
    return Spectrogram(values, cfg, t0)


def dataset_log_range(buffers, cfg=SpecConfig()):
    """(min, max) of the unnormalized log-mel over a collection of windows."""
    lo, hi = np.inf, -np.inf
    for b in buffers:
        lm = log_mel_from_power(stft_power(b, cfg), cfg)
        lo, hi = min(lo, lm.min()), max(hi, lm.max())
    return float(lo), float(hi)
