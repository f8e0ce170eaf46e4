"""Demonstration data model and manifest/WAV ingestion.

An episode is one demonstration: a mono audio track, a frame index pointing
at RGB images, and a 20 Hz track of end-effector poses plus gripper
openness. Episodes are immutable; calibration produces a new episode via
``dataclasses.replace``.

Clock convention: a sample's *corrected* time is its capture time minus
``episode.latency_s``. All queries that take a time address audio on the
corrected clock; frames and poses are addressed on their own clock.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.io import wavfile

from .errors import (
    MalformedManifest,
    MissingFile,
    NonMonotonicTimestamps,
    OutOfRange,
    UnsupportedAudioFormat,
)
from .rotation import QUAT_NORM_TOL

POSE_TOLERANCE_S = 0.025


@dataclass(frozen=True, eq=False)
class AudioTrack:
    samples: np.ndarray
    sample_rate_hz: int = 48000
    start_time_s: float = 0.0

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("audio samples must be one-dimensional")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("audio samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self):
        return len(self) / self.sample_rate_hz

    @property
    def end_time_s(self):
        return self.start_time_s + self.duration_s


@dataclass(frozen=True)
class FrameRef:
    path: str
    index: int = 0


@dataclass(frozen=True, eq=False)
class FrameIndex:
    timestamps_s: np.ndarray
    frame_refs: tuple
    nominal_rate_hz: float = 60.0

    def __post_init__(self):
        ts = np.asarray(self.timestamps_s, dtype=np.float64)
        if len(ts) != len(self.frame_refs):
            raise ValueError("timestamps and frame_refs differ in length")
        if len(ts) > 1 and np.any(np.diff(ts) <= 0):
            raise NonMonotonicTimestamps("frame timestamps must be strictly increasing")
        ts.setflags(write=False)
        object.__setattr__(self, "timestamps_s", ts)
        object.__setattr__(self, "frame_refs", tuple(self.frame_refs))

    def __len__(self):
        return len(self.frame_refs)

    def nearest(self, t_s):
        """Reference of the frame nearest ``t_s``, clamped to the recording."""
        i = _nearest_index(self.timestamps_s, t_s)
        return self.frame_refs[i]


@dataclass(frozen=True, eq=False)
class PoseSample:
    t_s: float
    position_m: np.ndarray
    orientation: np.ndarray  # (w, x, y, z)
    gripper_width: float

    def __post_init__(self):
        pos = np.asarray(self.position_m, dtype=np.float64).reshape(3)
        quat = np.asarray(self.orientation, dtype=np.float64).reshape(4)
        if not math.isfinite(self.t_s):
            raise ValueError("pose time must be finite")
        if abs(np.linalg.norm(quat) - 1.0) > QUAT_NORM_TOL:
            raise ValueError("orientation is not a unit quaternion")
        object.__setattr__(self, "position_m", pos)
        object.__setattr__(self, "orientation", quat)


@dataclass(frozen=True, eq=False)
class Episode:
    id: str
    audio: AudioTrack
    frames: FrameIndex
    poses: tuple
    environment_tag: str = ""
    latency_s: float = 0.0
    audio_path: str | None = None
    pose_times_s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        poses = tuple(self.poses)
        object.__setattr__(self, "poses", poses)
        times = np.array([p.t_s for p in poses], dtype=np.float64)
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise NonMonotonicTimestamps(f"episode {self.id!r}: pose timestamps must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "pose_times_s", times)

    def with_audio(self, audio):
        return replace(self, audio=audio)


def check_overlap(episode):
    """Raise MalformedManifest unless audio, frames and poses share a time span."""
    spans = [(episode.audio.start_time_s, episode.audio.end_time_s)]
    if len(episode.frames):
        spans.append((episode.frames.timestamps_s[0], episode.frames.timestamps_s[-1]))
    else:
        raise MalformedManifest("frames", "at least one frame is required")
    if episode.poses:
        spans.append((episode.pose_times_s[0], episode.pose_times_s[-1]))
    else:
        raise MalformedManifest("poses", "at least one pose is required")
    lo = max(s for s, _ in spans)
    hi = min(e for _, e in spans)
    if lo > hi:
        raise MalformedManifest("audio_start_s", "audio, frame and pose time ranges do not overlap")


def _nearest_index(times, t_s):
    # ties go to the earlier sample
    j = int(np.searchsorted(times, t_s, side="left"))
    if j == 0:
        return 0
    if j >= len(times):
        return len(times) - 1
    return j - 1 if (t_s - times[j - 1]) <= (times[j] - t_s) else j


def pose_at(episode, t_s):
    times = episode.pose_times_s
    if not len(times):
        raise OutOfRange("episode has no poses")
    if t_s < times[0] - POSE_TOLERANCE_S or t_s > times[-1] + POSE_TOLERANCE_S:
        raise OutOfRange(f"t={t_s:.6f}s outside pose track [{times[0]:.6f}, {times[-1]:.6f}]")
    return episode.poses[_nearest_index(times, t_s)]


def audio_segment(episode, t_end_s, duration_s):
    """Samples covering ``[t_end_s - duration_s, t_end_s]`` on the corrected clock.

    Output length is ``round(duration_s * rate)``. The window is zero-padded on
    the left when it starts before the recording. The returned track's
    ``start_time_s`` is on the corrected clock.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    track = episode.audio
    sr = track.sample_rate_hz
    n = int(round(duration_s * sr))
    corrected_start = track.start_time_s - episode.latency_s
    corrected_end = corrected_start + len(track) / sr
    if t_end_s > corrected_end + 0.5 / sr:
        raise OutOfRange(f"t_end={t_end_s:.6f}s after recording end {corrected_end:.6f}s")
    i0 = int(round((t_end_s - duration_s - corrected_start) * sr))
    out = np.zeros(n)
    lo = max(i0, 0)
    hi = min(i0 + n, len(track))
    if hi > lo:
        out[lo - i0 : hi - i0] = track.samples[lo:hi]
    return AudioTrack(out, sr, corrected_start + i0 / sr)


# -- WAV I/O -------------------------------------------------------------------


def read_wav(path):
    """Read a mono PCM16 or float32 WAV. int16 is scaled by 1/32768."""
    if not os.path.exists(path):
        raise MissingFile(f"audio file not found: {path}")
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise UnsupportedAudioFormat(f"{path}: {exc}") from exc
    if data.ndim != 1:
        raise UnsupportedAudioFormat(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedAudioFormat(f"{path}: unsupported sample type {data.dtype}")
    return AudioTrack(samples, int(rate))


def write_wav(path, track, dtype="float32"):
    if dtype == "int16":
        data = np.clip(np.round(track.samples * 32768.0), -32768, 32767).astype(np.int16)
    elif dtype == "float32":
        data = track.samples.astype(np.float32)
    else:
        raise ValueError(f"unsupported WAV dtype {dtype!r}")
    wavfile.write(path, track.sample_rate_hz, data)


# -- manifest ------------------------------------------------------------------


def _require(obj, key, kind, where=""):
    name = f"{where}{key}"
    if key not in obj:
        raise MalformedManifest(name, "missing")
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise MalformedManifest(name, f"expected a number, got {type(value).__name__}")
        if not math.isfinite(value):
            raise MalformedManifest(name, "must be finite")
        return float(value)
    if not isinstance(value, kind):
        raise MalformedManifest(name, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _vector(obj, key, n, where):
    value = _require(obj, key, list, where)
    if len(value) != n or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise MalformedManifest(f"{where}{key}", f"expected {n} numbers")
    return np.asarray(value, dtype=np.float64)


def _resolve(base, path):
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base, path))


def episode_from_manifest(data, base_dir="."):
    if not isinstance(data, dict):
        raise MalformedManifest("<root>", "expected a JSON object")
    ep_id = _require(data, "id", str)
    wav = _resolve(base_dir, _require(data, "audio_wav", str))
    audio_start = _require(data, "audio_start_s", float)
    environment = _require(data, "environment", str) if "environment" in data else ""
    latency = _require(data, "latency_s", float) if "latency_s" in data else 0.0

    frames = _require(data, "frames", list)
    f_times, f_refs = [], []
    for i, fr in enumerate(frames):
        where = f"frames[{i}]."
        if not isinstance(fr, dict):
            raise MalformedManifest(f"frames[{i}]", "expected an object")
        f_times.append(_require(fr, "t_s", float, where))
        index = fr.get("index", 0)
        if isinstance(index, bool) or not isinstance(index, int) or index < 0:
            raise MalformedManifest(f"{where}index", "expected a non-negative integer")
        f_refs.append(FrameRef(_resolve(base_dir, _require(fr, "image", str, where)), index))
    if np.any(np.diff(f_times) <= 0):
        raise NonMonotonicTimestamps(f"episode {ep_id!r}: frame timestamps must be strictly increasing")

    poses = []
    for i, p in enumerate(_require(data, "poses", list)):
        where = f"poses[{i}]."
        if not isinstance(p, dict):
            raise MalformedManifest(f"poses[{i}]", "expected an object")
        t = _require(p, "t_s", float, where)
        pos = _vector(p, "pos", 3, where)
        quat = _vector(p, "quat_wxyz", 4, where)
        if abs(np.linalg.norm(quat) - 1.0) > QUAT_NORM_TOL:
            raise MalformedManifest(f"{where}quat_wxyz", "not a unit quaternion")
        grip = _require(p, "gripper", float, where)
        if not 0.0 <= grip <= 1.0:
            raise MalformedManifest(f"{where}gripper", "normalized openness must lie in [0, 1]")
        poses.append(PoseSample(t, pos, quat, grip))

    track = read_wav(wav)
    audio = AudioTrack(track.samples, track.sample_rate_hz, audio_start)
    episode = Episode(
        id=ep_id,
        audio=audio,
        frames=FrameIndex(np.asarray(f_times), tuple(f_refs)),
        poses=tuple(poses),
        environment_tag=environment,
        latency_s=latency,
        audio_path=wav,
    )
    check_overlap(episode)
    return episode


def load_episode(manifest_path):
    if not os.path.exists(manifest_path):
        raise MissingFile(f"manifest not found: {manifest_path}")
    with open(manifest_path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedManifest("<root>", f"invalid JSON: {exc}") from exc
    return episode_from_manifest(data, os.path.dirname(os.path.abspath(manifest_path)))


def episode_to_manifest(episode):
    """Manifest dict for ``episode``. Paths are written as stored (absolute after load)."""
    if episode.audio_path is None:
        raise ValueError("episode has no audio_path; write the audio with write_wav first")
    return {
        "id": episode.id,
        "audio_wav": episode.audio_path,
        "audio_start_s": float(episode.audio.start_time_s),
        "frames": [
            {"t_s": float(t), "image": ref.path, **({"index": ref.index} if ref.index else {})}
            for t, ref in zip(episode.frames.timestamps_s, episode.frames.frame_refs)
        ],
        "poses": [
            {
                "t_s": float(p.t_s),
                "pos": [float(v) for v in p.position_m],
                "quat_wxyz": [float(v) for v in p.orientation],
                "gripper": float(p.gripper_width),
            }
            for p in episode.poses
        ],
        "environment": episode.environment_tag,
        "latency_s": float(episode.latency_s),
    }


def save_manifest(episode, path):
    with open(path, "w") as fh:
        json.dump(episode_to_manifest(episode), fh, indent=1)
        fh.write("\n")
