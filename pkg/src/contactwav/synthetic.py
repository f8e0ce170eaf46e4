"""Synthetic demonstrations for tests, benchmarks and smoke runs.

The generated audio is low-level white noise with short decaying 3 kHz
bursts ("taps") whose capture times are ``tap_times + audio_delay_s``; the
camera frames are small gradient images and the poses trace a smooth arc.
"""

import json
import os

import numpy as np
from scipy.spatial.transform import Rotation

from .episode import AudioTrack, write_wav


def tap_burst(sample_rate, duration_s=0.03, freq_hz=3000.0, amplitude=0.5):
    t = np.arange(int(round(duration_s * sample_rate))) / sample_rate
    return amplitude * np.sin(2 * np.pi * freq_hz * t) * np.exp(-t / (duration_s / 4))


def make_audio(duration_s, sample_rate=48000, tap_times=(), audio_delay_s=0.0, noise_rms=1e-3, seed=0):
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    x = noise_rms * rng.standard_normal(n)
    burst = tap_burst(sample_rate)
    for t in tap_times:
        i = int(round((t + audio_delay_s) * sample_rate))
        j = min(i + len(burst), n)
        if 0 <= i < n:
            x[i:j] += burst[: j - i]
    return AudioTrack(np.clip(x, -1.0, 1.0), sample_rate, 0.0)


def pose_track(duration_s, rate_hz=20.0):
    n = int(round(duration_s * rate_hz))
    t = np.arange(n) / rate_hz
    pos = np.stack([0.4 + 0.1 * np.cos(t), 0.1 * np.sin(t), 0.2 + 0.02 * t], axis=1)
    rotvec = np.stack([0.2 * np.sin(t), 0.1 * t, 0.3 * np.cos(0.5 * t)], axis=1)
    xyzw = Rotation.from_rotvec(rotvec).as_quat()
    wxyz = np.concatenate([xyzw[:, 3:], xyzw[:, :3]], axis=1)
    grip = 0.5 + 0.5 * np.sin(0.7 * t)
    return t, pos, wxyz, grip


def write_episode(directory, episode_id="synthetic", duration_s=10.0, tap_times=(), audio_delay_s=0.0,
                  latency_s=0.0, image_hw=(48, 64), frame_rate_hz=60.0, seed=0):
    """Write WAV, frame images and manifest under ``directory``; return the manifest path."""
    os.makedirs(directory, exist_ok=True)
    audio = make_audio(duration_s, tap_times=tap_times, audio_delay_s=audio_delay_s, seed=seed)
    wav = f"{episode_id}.wav"
    write_wav(os.path.join(directory, wav), audio)

    h, w = image_hw
    n_frames = int(round(duration_s * frame_rate_hz))
    yy, xx = np.mgrid[0:h, 0:w]
    frames = np.empty((n_frames, h, w, 3), dtype=np.float32)
    for i in range(n_frames):
        phase = i / max(n_frames - 1, 1)
        frames[i, ..., 0] = xx / (w - 1)
        frames[i, ..., 1] = yy / (h - 1)
        frames[i, ..., 2] = phase
    img = f"{episode_id}_frames.npy"
    np.save(os.path.join(directory, img), frames)

    t, pos, quat, grip = pose_track(duration_s)
    manifest = {
        "id": episode_id,
        "audio_wav": wav,
        "audio_start_s": 0.0,
        "frames": [{"t_s": i / frame_rate_hz, "image": img, "index": i} for i in range(n_frames)],
        "poses": [
            {"t_s": float(t[i]), "pos": pos[i].tolist(), "quat_wxyz": quat[i].tolist(), "gripper": float(grip[i])}
            for i in range(len(t))
        ],
        "environment": "synthetic",
        "latency_s": latency_s,
    }
    path = os.path.join(directory, f"{episode_id}.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
    return path


def write_noise_corpus(directory, n_clips=3, sample_rate=16000, kind="white", seed=0):
    """A small noise corpus with a ``corpus.json`` listing."""
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = []
    for i in range(n_clips):
        n = int(sample_rate * (0.5 + 0.25 * i))
        if kind == "motor":
            t = np.arange(n) / sample_rate
            x = 0.2 * np.sin(2 * np.pi * (120 + 40 * i) * t) + 0.02 * rng.standard_normal(n)
        else:
            x = 0.1 * rng.standard_normal(n)
        name = f"{kind}{i:02d}.wav"
        write_wav(os.path.join(directory, name), AudioTrack(np.clip(x, -1, 1), sample_rate))
        names.append(name)
    with open(os.path.join(directory, "corpus.json"), "w") as fh:
        json.dump({"label": kind, "clips": names}, fh, indent=1)
    return directory
