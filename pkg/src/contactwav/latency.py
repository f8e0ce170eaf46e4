"""Audio/video latency calibration from tap events.

A tap on the contact microphone is annotated with the capture time of the
video frame that shows contact. The audio onset near that frame is found by
a short-time energy threshold; the median onset-minus-frame offset is the
audio-vs-image latency, and adding the camera's own latency gives the total
applied to the episode.

Latencies are quantized to whole nanoseconds so that sums like
``0.17 + 0.06`` come out as the decimal value a person would write.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import InsufficientContext, NoOnset, NoTaps

FRAME_S = 0.005
CONTEXT_S = 0.100


def _quantize(t):
    return round(float(t), 9)


@dataclass(frozen=True)
class TapAnnotation:
    frame_time_s: float
    search_window_s: tuple

    def __post_init__(self):
        start, end = self.search_window_s
        if not end > start:
            raise ValueError("search window end must be after start")
        if not start <= self.frame_time_s <= end:
            raise ValueError("search window must contain the frame time")
        object.__setattr__(self, "search_window_s", (float(start), float(end)))


@dataclass(frozen=True)
class LatencyEstimate:
    audio_vs_image_s: float
    image_latency_s: float
    total_s: float

    @classmethod
    def from_parts(cls, audio_vs_image_s, image_latency_s):
        a = _quantize(audio_vs_image_s)
        i = _quantize(image_latency_s)
        return cls(a, i, _quantize(a + i))

    def to_dict(self):
        return {"audio_vs_image_s": self.audio_vs_image_s, "image_latency_s": self.image_latency_s, "total_s": self.total_s}


def energy_frame(sample_rate):
    """(frame, hop) in samples: 5 ms frames at 50% overlap."""
    frame = max(2, int(round(FRAME_S * sample_rate)))
    return frame, max(1, frame // 2)


def short_time_energy(samples, sample_rate):
    frame, hop = energy_frame(sample_rate)
    return _kernels.frame_energy(np.ascontiguousarray(samples, dtype=np.float64), frame, hop)


def detect_onset(samples, sample_rate, window, k_sigma=6.0):
    """First frame-start sample in ``window`` whose energy exceeds the noise floor.

    The floor (mean and std of frame energies) is measured over the 100 ms
    immediately preceding ``window[0]``.
    """
    x = np.asarray(samples, dtype=np.float64)
    start, end = int(window[0]), int(window[1])
    if not 0 <= start < end <= x.shape[0]:
        raise ValueError(f"window {window} not within buffer of {x.shape[0]} samples")
    ctx = int(round(CONTEXT_S * sample_rate))
    if start < ctx:
        raise InsufficientContext(f"need {ctx} samples before the window, have {start}")

    _, hop = energy_frame(sample_rate)
    floor = short_time_energy(x[start - ctx : start], sample_rate)
    mu, sigma = floor.mean(), floor.std()
    energy = short_time_energy(x[start:end], sample_rate)
    above = np.flatnonzero(energy > mu + k_sigma * sigma)
    if above.size == 0:
        raise NoOnset(f"no energy crossing in samples [{start}, {end})")
    return start + int(above[0]) * hop


def detect_tap_onset(track, tap, k_sigma=6.0):
    """Onset capture time (s) for a tap annotated against ``track``'s clock."""
    sr = track.sample_rate_hz
    lo = int(math.floor((tap.search_window_s[0] - track.start_time_s) * sr))
    hi = int(math.ceil((tap.search_window_s[1] - track.start_time_s) * sr))
    hi = min(hi, len(track))
    idx = detect_onset(track.samples, sr, (lo, hi), k_sigma)
    return track.start_time_s + idx / sr


def calibrate_latency(taps, image_latency_s):
    """``taps`` is a sequence of ``(TapAnnotation, onset_time_s)`` pairs."""
    taps = list(taps)
    if not taps:
        raise NoTaps("at least one tap is required")
    offsets = [_quantize(onset - tap.frame_time_s) for tap, onset in taps]
    return LatencyEstimate.from_parts(float(np.median(offsets)), image_latency_s)


def apply_latency(episode, estimate):
    """Set (not add) the episode's latency."""
    if not math.isfinite(estimate.total_s):
        raise ValueError("latency estimate must be finite")
    return replace(episode, latency_s=float(estimate.total_s))
