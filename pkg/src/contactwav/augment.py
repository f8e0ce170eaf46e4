"""Seeded training-time augmentation for audio windows and camera frames.

Audio: background and robot-motor noise clips are overlaid on the clean
window, each with its own Bernoulli draw. A selected clip is tiled from a
random offset to the window length and scaled so its RMS matches the clean
window's (times ``gain``).

Images: 95% random crop, bilinear resize to 224x224, then brightness,
contrast, saturation and hue jitter in that fixed order.

Every random quantity comes from one ``numpy.random.Generator`` seeded per
call, and the draws are returned as a record that can be replayed.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .episode import read_wav
from .errors import EmptyCorpus, EmptyInput, ImageTooSmall, InvalidConfig
from .resample import resample_to

RMS_EPS = 1e-8
CROP_RATIO = 0.95
IMAGE_SIZE = 224
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class NoiseCorpus:
    clips: tuple
    label: str = ""
    names: tuple = ()

    def __post_init__(self):
        clips = tuple(self.clips)
        if not clips:
            raise EmptyCorpus(f"noise corpus {self.label!r} has no clips")
        for i, c in enumerate(clips):
            if len(c) == 0:
                raise EmptyCorpus(f"noise corpus {self.label!r}: clip {i} is empty")
        names = tuple(self.names) or tuple(f"clip{i:03d}" for i in range(len(clips)))
        object.__setattr__(self, "clips", clips)
        object.__setattr__(self, "names", names)

    def __len__(self):
        return len(self.clips)


def load_corpus(directory, sample_rate_hz=16000, label=None):
    """Load ``corpus.json`` (``{"label": str, "clips": [file, ...]}``) or, when
    absent, every ``*.wav`` in ``directory`` in sorted order. Clips at another
    rate are resampled to ``sample_rate_hz``."""
    listing = os.path.join(directory, "corpus.json")
    if os.path.exists(listing):
        with open(listing) as fh:
            meta = json.load(fh)
        files = list(meta["clips"])
        label = label or meta.get("label", "")
    else:
        files = sorted(f for f in os.listdir(directory) if f.lower().endswith(".wav"))
    clips = [resample_to(read_wav(os.path.join(directory, f)), sample_rate_hz) for f in files]
    return NoiseCorpus(tuple(clips), label or os.path.basename(os.path.normpath(directory)), tuple(files))


@dataclass(frozen=True)
class AugmentSpec:
    seed: int = 0
    p_background: float = 0.5
    p_robot: float = 0.5
    gain: float = 1.0
    # "segment": match each window's RMS; "reference": match reference_rms
    scale_mode: str = "segment"
    reference_rms: float | None = None
    floor_rms: float = 0.01

    def validate(self):
        for name in ("p_background", "p_robot"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1]")
        if self.scale_mode not in ("segment", "reference"):
            raise InvalidConfig(f"unknown scale_mode {self.scale_mode!r}")
        if self.scale_mode == "reference" and not (self.reference_rms and self.reference_rms > 0):
            raise InvalidConfig("reference scale_mode needs a positive reference_rms")


@dataclass(frozen=True)
class OverlayDraw:
    clip: int
    name: str
    offset: int
    scale: float


@dataclass(frozen=True)
class AugmentRecord:
    seed: int
    applied_background: bool
    applied_robot: bool
    background: OverlayDraw | None = None
    robot: OverlayDraw | None = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        bg = OverlayDraw(**d["background"]) if d.get("background") else None
        rb = OverlayDraw(**d["robot"]) if d.get("robot") else None
        return cls(int(d["seed"]), bool(d["applied_background"]), bool(d["applied_robot"]), bg, rb)


def derive_seed(master_seed, episode_id, window_index):
    """64-bit per-window seed; independent of worker scheduling."""
    digest = hashlib.sha256(str(episode_id).encode()).digest()
    words = [int(master_seed) & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest[:8], "little"), int(window_index)]
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)[0])


def rms(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def noise_scale(clean, noise, gain, floor_rms=0.01, reference_rms=None):
    target = reference_rms if reference_rms is not None else rms(clean)
    if target < RMS_EPS:
        target = floor_rms
    n = rms(noise)
    if n == 0.0:
        return 0.0
    return gain * target / n


def add_tiled(clean, noise, offset, scale):
    """``clean + scale * noise[(offset + i) % len(noise)]``."""
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    idx = (int(offset) + np.arange(clean.shape[0])) % noise.shape[0]
    return clean + scale * noise[idx]


def overlay_noise(clean, noise, offset, gain, floor_rms=0.01, reference_rms=None):
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if clean.size == 0 or noise.size == 0:
        raise EmptyInput("clean and noise buffers must be nonempty")
    scale = noise_scale(clean, noise, gain, floor_rms, reference_rms)
    return add_tiled(clean, noise, offset, scale)


def _draw(rng, corpus):
    clip = int(rng.integers(len(corpus)))
    offset = int(rng.integers(len(corpus.clips[clip])))
    return clip, offset


def augment_audio(clean, background, robot, spec):
    """Return ``(augmented, record)``.

    Stream layout per call: two uniforms for the Bernoulli draws, then
    (clip, offset) for background, then for robot. Clip/offset are always
    drawn so the layout does not depend on the outcomes. Either corpus may be
    None, in which case it never contributes.
    """
    spec.validate()
    clean = np.asarray(clean, dtype=np.float64)
    if clean.size == 0:
        raise EmptyInput("clean buffer is empty")
    rng = np.random.default_rng(spec.seed)
    u_bg, u_robot = rng.random(2)
    out = clean.copy()
    draws = []
    ref = spec.reference_rms if spec.scale_mode == "reference" else None
    for corpus, u, p in ((background, u_bg, spec.p_background), (robot, u_robot, spec.p_robot)):
        if corpus is None:
            draws.append(None)
            continue
        clip, offset = _draw(rng, corpus)
        if not u < p:
            draws.append(None)
            continue
        noise = corpus.clips[clip].samples
        scale = noise_scale(clean, noise, spec.gain, spec.floor_rms, ref)
        out = add_tiled(out, noise, offset, scale)
        draws.append(OverlayDraw(clip, corpus.names[clip], offset, scale))
    record = AugmentRecord(spec.seed, draws[0] is not None, draws[1] is not None, draws[0], draws[1])
    return out, record


def replay(clean, background, robot, record):
    """Rebuild the augmented waveform from a record without touching the RNG."""
    out = np.asarray(clean, dtype=np.float64).copy()
    for corpus, draw in ((background, record.background), (robot, record.robot)):
        if draw is not None:
            out = add_tiled(out, corpus.clips[draw.clip].samples, draw.offset, draw.scale)
    return out


# -- images ---------------------------------------------------------------------


@dataclass(frozen=True)
class ImageParams:
    crop_y: int
    crop_x: int
    crop_h: int
    crop_w: int
    brightness: float = 1.0
    contrast: float = 1.0
    saturation: float = 1.0
    hue: float = 0.0

    @classmethod
    def identity(cls, shape):
        """Centred crop, no colour jitter."""
        h, w = shape[:2]
        ch, cw = round(CROP_RATIO * h), round(CROP_RATIO * w)
        return cls((h - ch) // 2, (w - cw) // 2, ch, cw)


def draw_image_params(shape, seed, jitter=True):
    h, w = shape[:2]
    if h < 32 or w < 32:
        raise ImageTooSmall(f"image must be at least 32x32, got {h}x{w}")
    ch, cw = round(CROP_RATIO * h), round(CROP_RATIO * w)
    rng = np.random.default_rng(seed)
    y0 = int(rng.integers(h - ch + 1))
    x0 = int(rng.integers(w - cw + 1))
    b, c, s, hue = rng.uniform([0.7, 0.6, 0.5, -0.08], [1.3, 1.4, 1.5, 0.08])
    if not jitter:
        return ImageParams(y0, x0, ch, cw)
    return ImageParams(y0, x0, ch, cw, float(b), float(c), float(s), float(hue))


def resize_bilinear(img, size=IMAGE_SIZE):
    import cv2

    return cv2.resize(np.ascontiguousarray(img, dtype=np.float64), (size, size), interpolation=cv2.INTER_LINEAR)


def _luma(img):
    return img @ LUMA


def adjust_hue(img, shift):
    """Rotate hue by ``shift`` turns of the colour circle."""
    return _kernels.hue_shift(np.ascontiguousarray(np.clip(img, 0.0, 1.0)), float(shift))


def apply_image_params(img, params, size=IMAGE_SIZE):
    img = np.asarray(img, dtype=np.float64)
    p = params
    out = resize_bilinear(img[p.crop_y : p.crop_y + p.crop_h, p.crop_x : p.crop_x + p.crop_w], size)
    out = np.clip(out, 0.0, 1.0)
    if p.brightness != 1.0:
        out = np.clip(out * p.brightness, 0.0, 1.0)
    if p.contrast != 1.0:
        mean = _luma(out).mean()
        out = np.clip(p.contrast * out + (1.0 - p.contrast) * mean, 0.0, 1.0)
    if p.saturation != 1.0:
        gray = _luma(out)[..., None]
        out = np.clip(p.saturation * out + (1.0 - p.saturation) * gray, 0.0, 1.0)
    if p.hue != 0.0:
        out = np.clip(adjust_hue(out, p.hue), 0.0, 1.0)
    return out


def augment_image(img, seed, jitter=True):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 image, got shape {img.shape}")
    return apply_image_params(img, draw_image_params(img.shape, seed, jitter))
