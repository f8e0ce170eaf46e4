import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from contactwav.cli import run, write_pgm
from contactwav.denoise import reduce_noise
from contactwav.episode import AudioTrack, load_episode, read_wav, write_wav
from contactwav.mel import SpecConfig, log_mel_normalize
from contactwav.resample import resample_to
from contactwav.synthetic import write_episode, write_noise_corpus


def call(argv, capsys):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture
def wav48(tmp_path, rng):
    path = tmp_path / "in.wav"
    t = np.arange(48000) / 48000
    write_wav(str(path), AudioTrack(0.3 * np.sin(2 * np.pi * 1000 * t) + 0.05 * rng.standard_normal(48000), 48000))
    return path


def test_calibrate_reported_numbers(tmp_path, capsys):
    manifest = write_episode(str(tmp_path), "cal", duration_s=3.0)
    taps = tmp_path / "taps.json"
    taps.write_text(json.dumps({"taps": [{"frame_time_s": 1.0, "search_window_s": [0.9, 1.4], "onset_time_s": 1.06}]}))
    code, out, err = call(["calibrate", "--episode", manifest, "--taps", taps, "--image-latency", "0.17"], capsys)
    assert code == 0
    assert out["total_s"] == 0.23 and out["audio_vs_image_s"] == 0.06
    assert err.startswith("# config ")


def test_calibrate_detects_and_writes(tmp_path, capsys):
    manifest = write_episode(str(tmp_path), "cal", duration_s=4.0, tap_times=[1.0, 2.0, 3.0], audio_delay_s=0.06)
    taps = tmp_path / "taps.json"
    taps.write_text(json.dumps({"taps": [{"frame_time_s": t, "search_window_s": [t - 0.05, t + 0.3]} for t in (1.0, 2.0, 3.0)]}))
    code, out, _ = call(["calibrate", "--episode", manifest, "--taps", taps, "--image-latency", "0.17", "--write"], capsys)
    assert code == 0
    assert abs(out["audio_vs_image_s"] - 0.06) <= 0.010
    assert load_episode(manifest).latency_s == out["total_s"]


def test_preprocess_matches_library(wav48, tmp_path, capsys):
    out_path = tmp_path / "out.wav"
    code, out, _ = call(["preprocess", "--in", wav48, "--out", out_path], capsys)
    assert code == 0 and out["samples"] == 16000
    ref = resample_to(read_wav(str(wav48)), 16000).samples.astype(np.float32)
    assert np.array_equal(read_wav(str(out_path)).samples, ref)


def test_augment(wav48, tmp_path, capsys):
    bg = write_noise_corpus(str(tmp_path / "bg"))
    rb = write_noise_corpus(str(tmp_path / "rb"), kind="motor")
    args = ["augment", "--in", wav48, "--bg-noise", bg, "--robot-noise", rb, "--p-background", 1, "--p-robot", 1, "--seed", 9]
    code, a, _ = call(args + ["--out", tmp_path / "a.wav"], capsys)
    code2, b, _ = call(args + ["--out", tmp_path / "b.wav"], capsys)
    assert code == code2 == 0
    assert a["record"] == b["record"] and a["record"]["applied_robot"]
    assert (tmp_path / "a.wav").read_bytes() == (tmp_path / "b.wav").read_bytes()


def test_denoise_matches_library(wav48, tmp_path, capsys):
    out_path = tmp_path / "d.wav"
    code, out, _ = call(["denoise", "--in", wav48, "--out", out_path, "--n-std", "2.0"], capsys)
    assert code == 0
    from contactwav.denoise import GateConfig

    x = resample_to(read_wav(str(wav48)), 16000).samples
    ref = np.clip(reduce_noise(x, SpecConfig(), GateConfig(n_std_thresh=2.0)), -1, 1).astype(np.float32)
    assert np.array_equal(read_wav(str(out_path)).samples, ref)


def test_maskfreq(wav48, tmp_path, capsys):
    npy = tmp_path / "m.npy"
    code, out, _ = call(["maskfreq", "--in", wav48, "--cutoff-hz", 500, "--npy", npy], capsys)
    assert code == 0 and out["shape"] == [64, 98]
    x = resample_to(read_wav(str(wav48)), 16000).samples
    ref = log_mel_normalize(x, SpecConfig(), mask_below_hz=500.0).values
    assert np.array_equal(np.load(npy), ref)


def test_inspect_wav_dumps(wav48, tmp_path, capsys):
    csv, pgm = tmp_path / "s.csv", tmp_path / "s.pgm"
    code, out, _ = call(["inspect", "--in", wav48, "--t-end", 1.0, "--duration", 0.5, "--csv", csv, "--pgm", pgm], capsys)
    assert code == 0
    assert out["samples"] == 8000 and out["shape"] == [64, 48]
    values = np.loadtxt(csv, delimiter=",")
    assert values.shape == (64, 48) and values.min() == -1 and values.max() == 1
    raw = pgm.read_bytes()
    assert raw.startswith(b"P5\n48 64\n255\n")
    assert len(raw) == len(b"P5\n48 64\n255\n") + 64 * 48


def test_write_pgm_levels(tmp_path):
    write_pgm(tmp_path / "x.pgm", np.array([[-1.0, 0.0, 1.0]]))
    assert (tmp_path / "x.pgm").read_bytes()[-3:] == bytes([0, 128, 255])


def _checksums(d):
    return {f: hashlib.sha256(open(os.path.join(d, f), "rb").read()).hexdigest() for f in sorted(os.listdir(d))}


def test_export_twice_identical(tmp_path, capsys):
    mdir = tmp_path / "manifests"
    write_episode(str(mdir), "a", duration_s=1.5, seed=1)
    write_episode(str(mdir), "b", duration_s=1.5, seed=2)
    bg = write_noise_corpus(str(tmp_path / "bg"))
    common = ["export", "--manifest-dir", mdir, "--audio-window", 0.5, "--horizon", 8, "--seed", 7,
              "--augment", "--bg-noise", bg]
    code, out, _ = call(common + ["--out", tmp_path / "o1"], capsys)
    assert code == 0 and out["episodes"] == 2 and out["windows"] == 44
    code, _, _ = call(common + ["--out", tmp_path / "o2", "--jobs", 2], capsys)
    assert code == 0
    assert _checksums(tmp_path / "o1") == _checksums(tmp_path / "o2")

    code, info, _ = call(["inspect", "--in", tmp_path / "o1"], capsys)
    assert code == 0 and info["windows"] == 44
    code, info, _ = call(["inspect", "--in", tmp_path / "o1" / "shard-00000.cwav"], capsys)
    assert code == 0 and info["tensors"] == 4 * 22


def test_unknown_flag_is_usage_error(capsys):
    assert run(["preprocess", "--in", "a", "--out", "b", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err
    assert run([]) == 1
    assert run(["frobnicate"]) == 1


def test_data_errors(tmp_path, capsys):
    assert run(["preprocess", "--in", str(tmp_path / "missing.wav"), "--out", str(tmp_path / "o.wav")]) == 2
    bad = tmp_path / "bad.cwav"
    bad.write_bytes(b"XXXX")
    assert run(["inspect", "--in", str(bad)]) == 2
    assert run(["export", "--manifest-dir", str(tmp_path), "--out", str(tmp_path / "o"), "--audio-window", "0"]) == 2
    err = capsys.readouterr().err
    assert "error" in err


def test_module_entry_point(wav48, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "contactwav", "inspect", "--in", str(wav48)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["shape"] == [64, 98]
    assert proc.stderr.startswith("# config ")
