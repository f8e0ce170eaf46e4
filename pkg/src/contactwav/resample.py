"""Rational-ratio polyphase resampling with a Kaiser-windowed sinc.

The prototype low-pass runs at ``src * up`` where ``up/down`` is the
gcd-reduced ratio. Its length is ``taps_per_phase * max(up, down)`` rounded
up to an odd number, so the group delay is an integer number of samples and
is removed exactly: output sample ``k`` is the filtered signal at capture
time ``start + k / dst``. The input is treated as zero outside its support.
Output length is ``ceil(N * up / down)``, i.e. every output instant that
falls inside ``[start, start + N / src)``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .episode import AudioTrack
from .errors import EmptyInput, InvalidSpec


@dataclass(frozen=True)
class ResampleSpec:
    src_rate_hz: int = 48000
    dst_rate_hz: int = 16000
    filter_taps_per_phase: int = 64
    kaiser_beta: float = 8.6
    cutoff_fraction: float = 0.9

    def validate(self):
        if self.src_rate_hz <= 0 or self.dst_rate_hz <= 0:
            raise InvalidSpec("sample rates must be positive")
        if self.filter_taps_per_phase <= 0:
            raise InvalidSpec("filter_taps_per_phase must be positive")
        if not 0.0 < self.cutoff_fraction <= 1.0:
            raise InvalidSpec("cutoff_fraction must lie in (0, 1]")
        if self.kaiser_beta < 0:
            raise InvalidSpec("kaiser_beta must be non-negative")

    @property
    def ratio(self):
        g = math.gcd(self.src_rate_hz, self.dst_rate_hz)
        return self.dst_rate_hz // g, self.src_rate_hz // g

    @property
    def cutoff_hz(self):
        return self.cutoff_fraction * min(self.src_rate_hz, self.dst_rate_hz) / 2.0


@dataclass(frozen=True)
class FilterBank:
    taps: np.ndarray
    up: int
    down: int
    delay: int


@lru_cache(maxsize=32)
def design_filter(spec):
    spec.validate()
    up, down = spec.ratio
    n = spec.filter_taps_per_phase * max(up, down)
    if n % 2 == 0:
        n += 1
    delay = (n - 1) // 2
    fc = spec.cutoff_hz / (spec.src_rate_hz * up)  # cycles per upsampled sample
    t = np.arange(n) - delay
    h = 2.0 * fc * np.sinc(2.0 * fc * t) * np.kaiser(n, spec.kaiser_beta)
    h /= h.sum()
    h.setflags(write=False)
    return FilterBank(h, up, down, delay)


def output_length(n_in, spec):
    up, down = spec.ratio
    return -(-n_in * up // down)


def resample_array(x, spec):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        raise EmptyInput("cannot resample an empty signal")
    bank = design_filter(spec)
    if bank.up == bank.down == 1:
        return x.copy()
    n_out = output_length(x.shape[0], spec)
    return _kernels.polyphase_resample(x, bank.taps, bank.up, bank.down, bank.delay, n_out)


def resample(track, spec=None):
    if spec is None:
        spec = ResampleSpec(src_rate_hz=track.sample_rate_hz)
    if track.sample_rate_hz != spec.src_rate_hz:
        raise InvalidSpec(f"track is {track.sample_rate_hz} Hz but spec expects {spec.src_rate_hz} Hz")
    y = resample_array(track.samples, spec)
    return AudioTrack(y, spec.dst_rate_hz, track.start_time_s)


def resample_to(track, rate_hz):
    if track.sample_rate_hz == rate_hz:
        return track
    return resample(track, ResampleSpec(src_rate_hz=track.sample_rate_hz, dst_rate_hz=rate_hz))
