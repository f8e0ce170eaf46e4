"""Training windows: observations, action horizons and dataset export.

A window at query time ``t`` (on the 20 Hz control grid) holds

* a normalized log-mel spectrogram of the audio in ``[t - audio_window_s, t]``
  on the latency-corrected clock (resampled, optionally augmented);
* the camera frames and proprioception at the last ``obs_*_steps`` grid
  times, oldest first, repeating the earliest sample before the recording
  starts;
* ``action_horizon`` future 10-D actions at ``t + k / rate`` for
  ``k = 1..action_horizon``.

A 10-D pose vector is ``[x, y, z, r00, r10, r20, r01, r11, r21, gripper]``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import container
from .augment import (
    IMAGE_SIZE,
    AugmentRecord,
    AugmentSpec,
    apply_image_params,
    augment_audio,
    derive_seed,
    draw_image_params,
    resize_bilinear,
)
from .episode import POSE_TOLERANCE_S, audio_segment, pose_at
from .errors import ContactwavError, ExportError, InsufficientFuture, InvalidConfig, OutOfRange
from .mel import SpecConfig, Spectrogram, log_mel_normalize
from .resample import resample_to
from .rotation import quat_to_rotmat, rotmat_to_sixd

log = logging.getLogger(__name__)

TENSOR_ORDER = ("log_mel", "images", "proprio", "actions")


@dataclass(frozen=True)
class WindowConfig:
    audio_window_s: float
    obs_image_steps: int = 2
    obs_pose_steps: int = 2
    control_rate_hz: float = 20.0
    action_horizon: int = 16
    spec: SpecConfig = field(default_factory=SpecConfig)
    augment: AugmentSpec | None = None
    augment_images: bool = True
    mask_below_hz: float | None = None
    # "absolute": base frame; "relative": expressed in the current pose's frame
    action_frame: str = "absolute"
    image_size: int = IMAGE_SIZE

    def validate(self):
        if not self.audio_window_s > 0:
            raise InvalidConfig("audio_window_s must be positive")
        if self.action_horizon < 1:
            raise InvalidConfig("action_horizon must be >= 1")
        if self.obs_image_steps < 1 or self.obs_pose_steps < 1:
            raise InvalidConfig("observation step counts must be >= 1")
        if not self.control_rate_hz > 0:
            raise InvalidConfig("control_rate_hz must be positive")
        if self.action_frame not in ("absolute", "relative"):
            raise InvalidConfig(f"unknown action_frame {self.action_frame!r}")
        self.spec.validate()
        if self.augment is not None:
            self.augment.validate()

    def to_dict(self):
        return {
            "audio_window_s": self.audio_window_s,
            "obs_image_steps": self.obs_image_steps,
            "obs_pose_steps": self.obs_pose_steps,
            "control_rate_hz": self.control_rate_hz,
            "action_horizon": self.action_horizon,
            "spec": self.spec.to_dict(),
            "augment": None if self.augment is None else {
                "p_background": self.augment.p_background,
                "p_robot": self.augment.p_robot,
                "gain": self.augment.gain,
                "scale_mode": self.augment.scale_mode,
                "reference_rms": self.augment.reference_rms,
                "floor_rms": self.augment.floor_rms,
                "augment_images": self.augment_images,
            },
            "mask_below_hz": self.mask_below_hz,
            "action_frame": self.action_frame,
            "image_size": self.image_size,
        }


@dataclass(frozen=True, eq=False)
class ObservationWindow:
    log_mel: Spectrogram
    image_refs: tuple
    proprio: np.ndarray  # (obs_pose_steps, 10)
    t_s: float


@dataclass(frozen=True, eq=False)
class ActionHorizon:
    actions: np.ndarray  # (action_horizon, 10)
    t_s: float


def pose_vector(pose):
    r = quat_to_rotmat(pose.orientation)
    return np.concatenate([pose.position_m, rotmat_to_sixd(r), [pose.gripper_width]])


def relative_pose_vector(pose, ref):
    r_ref = quat_to_rotmat(ref.orientation)
    r = r_ref.T @ quat_to_rotmat(pose.orientation)
    p = r_ref.T @ (pose.position_m - ref.position_m)
    return np.concatenate([p, rotmat_to_sixd(r), [pose.gripper_width]])


def _history_pose(episode, t):
    if t < episode.pose_times_s[0] - POSE_TOLERANCE_S:
        return episode.poses[0]
    return pose_at(episode, t)


def prepare_episode(episode, cfg):
    """Resample the episode's audio to the spectrogram rate once, up front."""
    return episode.with_audio(resample_to(episode.audio, cfg.spec.sample_rate_hz))


def build_window(episode, t_s, cfg, corpora=None, seed=None):
    """Return ``(ObservationWindow, ActionHorizon, AugmentRecord | None)``.

    ``corpora`` is ``(background, robot)``; either may be None. ``seed``
    overrides ``cfg.augment.seed``.
    """
    cfg.validate()
    dt = 1.0 / cfg.control_rate_hz
    current = pose_at(episode, t_s)

    actions = np.empty((cfg.action_horizon, 10))
    for k in range(1, cfg.action_horizon + 1):
        try:
            future = pose_at(episode, t_s + k * dt)
        except OutOfRange as exc:
            raise InsufficientFuture(f"t={t_s:.6f}s: only {k - 1} of {cfg.action_horizon} future steps") from exc
        if cfg.action_frame == "relative":
            actions[k - 1] = relative_pose_vector(future, current)
        else:
            actions[k - 1] = pose_vector(future)

    proprio = np.empty((cfg.obs_pose_steps, 10))
    for j in range(cfg.obs_pose_steps):
        pose = _history_pose(episode, t_s - (cfg.obs_pose_steps - 1 - j) * dt)
        proprio[j] = relative_pose_vector(pose, current) if cfg.action_frame == "relative" else pose_vector(pose)

    image_refs = tuple(
        episode.frames.nearest(t_s - (cfg.obs_image_steps - 1 - j) * dt) for j in range(cfg.obs_image_steps)
    )

    if episode.audio.sample_rate_hz != cfg.spec.sample_rate_hz:
        episode = prepare_episode(episode, cfg)
    seg = audio_segment(episode, t_s, cfg.audio_window_s)
    samples = seg.samples
    record = None
    if cfg.augment is not None:
        bg, robot = corpora if corpora is not None else (None, None)
        spec = cfg.augment if seed is None else replace(cfg.augment, seed=seed)
        samples, record = augment_audio(samples, bg, robot, spec)
    log_mel = log_mel_normalize(samples, cfg.spec, cfg.mask_below_hz, seg.start_time_s)

    obs = ObservationWindow(log_mel, image_refs, proprio, float(t_s))
    return obs, ActionHorizon(actions, float(t_s)), record


# -- images ---------------------------------------------------------------------


@lru_cache(maxsize=64)
def load_frame(path, index=0):
    """HxWx3 float image in [0, 1] from a .npy array or any Pillow-readable file."""
    if path.endswith(".npy"):
        arr = np.load(path, mmap_mode="r")
        if arr.ndim == 4:
            arr = arr[index]
        arr = np.array(arr)
    else:
        from PIL import Image

        with Image.open(path) as im:
            if index:
                im.seek(index)
            arr = np.asarray(im.convert("RGB"))
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float64) / 255.0
    arr = np.asarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def materialize_images(obs, cfg, seed=None):
    """Stack the window's frames as (steps, size, size, 3). One crop/jitter
    draw is shared by all frames of a window."""
    imgs = [load_frame(ref.path, ref.index) for ref in obs.image_refs]
    if cfg.augment is not None and cfg.augment_images and seed is not None:
        params = draw_image_params(imgs[0].shape, derive_seed(seed, "image", 0))
        out = [apply_image_params(im, params, cfg.image_size) for im in imgs]
    else:
        out = [np.clip(resize_bilinear(im, cfg.image_size), 0.0, 1.0) for im in imgs]
    return np.stack(out)


# -- export ---------------------------------------------------------------------


@dataclass
class DatasetIndex:
    path: str
    windows: list
    shards: list
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.windows)

    def read_window(self, i):
        """Tensors of window ``i`` as a dict of float32 arrays."""
        w = self.windows[i]
        shard = os.path.join(os.path.dirname(self.path), w["shard"])
        return {name: container.read_tensor(shard, t["offset"]) for name, t in w["tensors"].items()}


def load_index(path):
    if os.path.isdir(path):
        path = os.path.join(path, "dataset.json")
    with open(path) as fh:
        data = json.load(fh)
    meta = {k: v for k, v in data.items() if k not in ("windows", "shards")}
    return DatasetIndex(path, data["windows"], data["shards"], meta)


def grid_times(episode, cfg):
    if not episode.poses:
        return np.zeros(0)
    t0, t1 = episode.pose_times_s[0], episode.pose_times_s[-1]
    n = int(np.floor((t1 - t0) * cfg.control_rate_hz + 1e-9)) + 1
    return t0 + np.arange(n) / cfg.control_rate_hz


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _export_episode(episode, cfg, out_dir, shard_name, master_seed, corpora):
    episode = prepare_episode(episode, cfg)
    entries = []
    path = os.path.join(out_dir, shard_name)
    with container.ShardWriter(path) as writer:
        for k, t in enumerate(grid_times(episode, cfg)):
            seed = derive_seed(master_seed, episode.id, k)
            try:
                obs, act, record = build_window(episode, float(t), cfg, corpora, seed)
                images = materialize_images(obs, cfg, seed)
            except InsufficientFuture:
                break
            except ContactwavError as exc:
                raise ExportError(f"episode {episode.id!r} t={t:.6f}s: {exc}") from exc
            tensors = {}
            for name, arr in zip(TENSOR_ORDER, (obs.log_mel.values, images, obs.proprio, act.actions)):
                tensors[name] = {"offset": writer.write(arr), "shape": list(arr.shape)}
            entries.append(
                {
                    "episode_id": episode.id,
                    "window_index": k,
                    "t_s": float(t),
                    "shard": shard_name,
                    "seed": seed,
                    "image_refs": [{"path": r.path, "index": r.index} for r in obs.image_refs],
                    "tensors": tensors,
                    "augment": None if record is None else record.to_dict(),
                }
            )
    return entries, {"file": shard_name, "episode_id": episode.id, "sha256": _sha256(path), "windows": len(entries)}


def _export_job(args):
    return _export_episode(*args)


def export_dataset(episodes, cfg, out_dir, master_seed=0, corpora=None, jobs=1):
    """Write one shard per episode plus ``dataset.json``; returns the index.

    Output bytes depend only on the inputs and ``master_seed``, not on
    ``jobs``.
    """
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    jobs_args = [(ep, cfg, out_dir, f"shard-{i:05d}.cwav", master_seed, corpora) for i, ep in enumerate(episodes)]
    try:
        if jobs > 1 and len(jobs_args) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_export_job, jobs_args))
        else:
            results = [_export_job(a) for a in jobs_args]
    except OSError as exc:
        raise ExportError(f"I/O error during export: {exc}") from exc

    windows, shards = [], []
    for entries, shard in results:
        windows.extend(entries)
        shards.append(shard)
        log.info("episode %s: %d windows", shard["episode_id"], shard["windows"])
    data = {
        "format": {
            "container": "CWAV",
            "version": container.VERSION,
            "dtype": "float32",
            "tensor_order": list(TENSOR_ORDER),
            "pose_layout": ["x", "y", "z", "r00", "r10", "r20", "r01", "r11", "r21", "gripper"],
            "sixd_order": "column-major: first column then second column of the rotation matrix",
            "action_frame": cfg.action_frame,
            "quaternion": "wxyz, Hamilton",
        },
        "master_seed": int(master_seed),
        "config": cfg.to_dict(),
        "shards": shards,
        "windows": windows,
    }
    path = os.path.join(out_dir, "dataset.json")
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return DatasetIndex(path, windows, shards, {k: v for k, v in data.items() if k not in ("windows", "shards")})
