"""Noise-handling baselines: low-frequency row masking and spectral gating.

Spectral gating works on the magnitude STFT:

1. each frequency channel is smoothed in time by a one-pole IIR run forward
   then backward (zero phase);
2. a threshold ``level + n_std * spread`` is estimated per frequency band
   from the smoothed spectrogram;
3. cells whose smoothed magnitude clears the threshold are kept; the binary
   gate is smoothed with a separable triangular kernel and clamped to
   ``[gate_floor, 1]``;
4. the gain multiplies the complex STFT, which is inverted by least-squares
   overlap-add.

Band statistics are pooled over ``stat_halfwidth_bins`` neighbouring
channels on each side and use median / scaled MAD. With a halfwidth of zero
each row is judged only against itself, which cannot tell a steady tone
from steady noise.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from . import _kernels
from .errors import DimensionMismatch, InvalidConfig, TooShort
from .mel import SpecConfig, analysis_window, stft

MAD_TO_STD = 1.4826


@dataclass(frozen=True)
class GateConfig:
    time_constant_s: float = 2.0
    n_std_thresh: float = 1.5
    mask_smooth_freq_bins: int = 3
    mask_smooth_time_frames: int = 5
    gate_floor: float = 0.0
    stat_halfwidth_bins: int = 8
    # None: statistics over the whole clip; otherwise a centred rolling window
    stat_window_s: float | None = None

    def validate(self):
        if not self.time_constant_s > 0:
            raise InvalidConfig("time_constant_s must be positive")
        for name in ("mask_smooth_freq_bins", "mask_smooth_time_frames"):
            v = getattr(self, name)
            if v < 1 or v % 2 == 0:
                raise InvalidConfig(f"{name} must be odd and >= 1")
        if not 0.0 <= self.gate_floor <= 1.0:
            raise InvalidConfig("gate_floor must lie in [0, 1]")
        if self.stat_halfwidth_bins < 0:
            raise InvalidConfig("stat_halfwidth_bins must be >= 0")
        if self.stat_window_s is not None and not self.stat_window_s > 0:
            raise InvalidConfig("stat_window_s must be positive")


def mask_below_freq(spec, cfg, cutoff_hz):
    """Zero rows whose bin centre ``k * sr / n_fft`` lies below ``cutoff_hz``.

    A cutoff at or above Nyquist zeroes every row.
    """
    spec = np.asarray(spec)
    if spec.shape[0] != cfg.n_freqs:
        raise DimensionMismatch(f"expected {cfg.n_freqs} frequency rows, got {spec.shape[0]}")
    out = spec.copy()
    if cutoff_hz >= cfg.sample_rate_hz / 2.0:
        out[:] = 0
        return out
    centers = np.arange(cfg.n_freqs) * cfg.sample_rate_hz / cfg.n_fft
    out[centers < cutoff_hz] = 0
    return out


def masked_bins(cfg, cutoff_hz):
    return int(np.count_nonzero(mask_below_freq(np.ones((cfg.n_freqs, 1)), cfg, cutoff_hz)[:, 0] == 0))


def smooth_iir_bidirectional(spec, gate, hop_s):
    a = float(np.exp(-hop_s / gate.time_constant_s))
    x = np.ascontiguousarray(spec, dtype=np.float64)
    if x.ndim == 1:
        return _kernels.iir_forward_backward(x[None, :], a)[0]
    return _kernels.iir_forward_backward(x, a)


def triangular_kernel(extent):
    half = (extent + 1) // 2
    k = half - np.abs(np.arange(extent) - (extent - 1) // 2)
    return k / k.sum()


def _band_statistics(smoothed, gate, hop_s):
    """Per-channel (level, spread) pooled over neighbouring channels."""
    w = gate.stat_halfwidth_bins
    n_f = smoothed.shape[0]
    if gate.stat_window_s is None:
        level = np.empty(n_f)
        spread = np.empty(n_f)
        for f in range(n_f):
            block = smoothed[max(0, f - w) : f + w + 1].ravel()
            med = np.median(block)
            level[f] = med
            spread[f] = MAD_TO_STD * np.median(np.abs(block - med))
        return level[:, None], spread[:, None]
    from scipy.ndimage import median_filter

    frames = max(1, int(round(gate.stat_window_s / hop_s)))
    size = (2 * w + 1, frames)
    level = median_filter(smoothed, size=size, mode="nearest")
    spread = MAD_TO_STD * median_filter(np.abs(smoothed - level), size=size, mode="nearest")
    return level, spread


def gate_mask(magnitude, gate, hop_s):
    """Soft gain in [gate_floor, 1] for each time-frequency cell."""
    gate.validate()
    smoothed = smooth_iir_bidirectional(magnitude, gate, hop_s)
    level, spread = _band_statistics(smoothed, gate, hop_s)
    keep = (smoothed > level + gate.n_std_thresh * spread).astype(np.float64)
    # smooth the noise indicator, then invert it into a gain
    noise = 1.0 - keep
    noise = convolve1d(noise, triangular_kernel(gate.mask_smooth_freq_bins), axis=0, mode="nearest")
    noise = convolve1d(noise, triangular_kernel(gate.mask_smooth_time_frames), axis=1, mode="nearest")
    return np.clip(1.0 - noise, gate.gate_floor, 1.0)


def istft(spec, cfg, n_out):
    """Least-squares overlap-add inverse of :func:`contactwav.mel.stft`.

    Samples where the summed squared window vanishes are set to zero.
    """
    frames = np.fft.irfft(spec.T, n=cfg.n_fft, axis=-1)
    win = analysis_window(cfg)
    pad = cfg.n_fft - cfg.win_length
    left = pad // 2
    y, wsum = _kernels.overlap_add(np.ascontiguousarray(frames), win, cfg.hop_length, n_out + pad)
    ok = wsum > 1e-10
    y[ok] /= wsum[ok]
    y[~ok] = 0.0
    return y[left : left + n_out]


def _padded(samples, cfg):
    x = np.asarray(samples, dtype=np.float64)
    if x.shape[0] < cfg.win_length:
        raise TooShort(f"need at least {cfg.win_length} samples, got {x.shape[0]}")
    # pad so every input sample is covered by a full set of overlapping frames
    lead = cfg.win_length
    tail = cfg.win_length + (-(x.shape[0] + 2 * cfg.win_length - cfg.win_length)) % cfg.hop_length
    return np.pad(x, (lead, tail)), lead


def reduce_noise(samples, cfg=SpecConfig(), gate=GateConfig(), return_mask=False, force_mask=None):
    """Spectral-gating noise reduction; output has the input's length.

    ``force_mask`` replaces the computed mask with a constant (test hook for
    the reconstruction check).
    """
    cfg.validate()
    x, lead = _padded(samples, cfg)
    spec = stft(x, cfg)
    if force_mask is None:
        mask = gate_mask(np.abs(spec), gate, cfg.hop_length / cfg.sample_rate_hz)
    else:
        mask = np.full(spec.shape, float(force_mask))
    y = istft(spec * mask, cfg, x.shape[0])
    out = y[lead : lead + len(samples)]
    return (out, mask) if return_mask else out
