"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run standalone with ``python tests/test_acceptance.py`` or through pytest, in
which case the lines are repeated in the terminal summary.
"""

import filecmp
import hashlib
import os
import sys
import tempfile
import time

import numpy as np
from scipy.spatial.transform import Rotation

from contactwav.augment import AugmentSpec, NoiseCorpus, augment_audio, derive_seed, noise_scale, overlay_noise
from contactwav.denoise import mask_below_freq, masked_bins, reduce_noise
from contactwav.episode import AudioTrack, load_episode
from contactwav.latency import TapAnnotation, calibrate_latency, detect_tap_onset
from contactwav.mel import SpecConfig, log_mel_normalize, stft_power
from contactwav.resample import ResampleSpec, resample, resample_array
from contactwav.rotation import quat_to_rotmat, rotation_residuals, rotmat_to_sixd, sixd_to_rotmat
from contactwav.synthetic import write_episode
from contactwav.windows import WindowConfig, export_dataset

RESULTS = []
_T0 = time.perf_counter()


def report(n, name, ok, detail):
    line = f"criterion {n} [{name}]: {'PASS' if ok else 'FAIL'} ({detail})"
    RESULTS.append(line)
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line


def test_criterion_1_spectrogram_constants():
    x = np.random.default_rng(1).standard_normal(32000)
    t = time.perf_counter()
    s = log_mel_normalize(x, SpecConfig())
    dt = time.perf_counter() - t
    ok = s.shape == (64, 198) and s.values.min() == -1.0 and s.values.max() == 1.0 and dt < 1.0
    report(1, "spectrogram", ok, f"shape {s.shape}, range [{s.values.min()}, {s.values.max()}], {dt * 1e3:.1f} ms")


def test_criterion_2_stft_oracle():
    cfg = SpecConfig()
    x = np.random.default_rng(2).standard_normal(1024)
    n = cfg.n_fft
    win = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    basis = np.exp(-2j * np.pi * np.outer(np.arange(n // 2 + 1), np.arange(n)) / n)
    frames = 1 + (len(x) - n) // cfg.hop_length
    ref = np.stack([np.abs(basis @ (x[m * cfg.hop_length : m * cfg.hop_length + n] * win)) ** 2 for m in range(frames)], 1)
    err = float(np.max(np.abs(stft_power(x, cfg) - ref)))
    report(2, "stft oracle", err < 1e-6, f"max abs error {err:.2e}")


def test_criterion_3_resampler():
    spec = ResampleSpec()
    out = resample(AudioTrack(np.zeros(48000), 48000), spec)
    t = np.arange(48000) / 48000
    y = resample_array(np.sin(2 * np.pi * 1000 * t), spec)
    ref = np.sin(2 * np.pi * 1000 * np.arange(len(y)) / 16000)
    r = float(np.corrcoef(y[100:-100], ref[100:-100])[0, 1])
    x9 = np.sin(2 * np.pi * 9000 * t)
    y9 = resample_array(x9, spec)
    atten = float(-20 * np.log10(np.sqrt(np.mean(y9[100:-100] ** 2)) / np.sqrt(np.mean(x9**2))))
    ok = len(out) == 16000 and r > 0.999 and atten >= 60.0
    report(3, "resampler", ok, f"len {len(out)}, corr {r:.7f}, 9 kHz attenuation {atten:.1f} dB")


def test_criterion_4_rotation_codec():
    r = Rotation.random(1000, random_state=4).as_matrix()
    six = rotmat_to_sixd(r)
    back = sixd_to_rotmat(six)
    rt = float(np.max(np.abs(back - r)))
    ortho, det = rotation_residuals(back)
    scale = np.random.default_rng(4).uniform(1e-3, 1e3, size=(1000, 1))
    inv = float(np.max(np.abs(sixd_to_rotmat(six * scale) - back)))
    q = Rotation.random(100, random_state=5).as_quat()
    qr = float(np.max(np.abs(quat_to_rotmat(np.roll(q, 1, axis=1)) - Rotation.from_quat(q).as_matrix())))
    ok = rt < 1e-9 and ortho < 1e-9 and det < 1e-9 and inv < 1e-9 and qr < 1e-9
    report(4, "rotation codec", ok, f"round trip {rt:.1e}, ortho {ortho:.1e}, det {det:.1e}, scaling {inv:.1e}")


def test_criterion_5_latency():
    tap = TapAnnotation(1.0, (0.9, 1.4))
    total = calibrate_latency([(tap, 1.06)], 0.17).total_s
    errors = []
    with tempfile.TemporaryDirectory() as d:
        for delay in (0.01, 0.05, 0.10, 0.23):
            taps = (1.0, 2.5, 4.0)
            ep = load_episode(write_episode(d, f"d{int(delay * 100)}", 5.0, taps, audio_delay_s=delay))
            track = resample(ep.audio, ResampleSpec())
            pairs = [(TapAnnotation(t, (t - 0.05, t + 0.4)), None) for t in taps]
            pairs = [(a, detect_tap_onset(track, a)) for a, _ in pairs]
            errors.append(abs(calibrate_latency(pairs, 0.0).audio_vs_image_s - delay))
    ok = total == 0.23 and max(errors) <= 0.010
    report(5, "latency", ok, f"total {total}, worst recovery error {max(errors) * 1e3:.2f} ms")


def test_criterion_6_augmentation():
    rng = np.random.default_rng(6)
    bg = NoiseCorpus((AudioTrack(rng.standard_normal(64), 16000),))
    rb = NoiseCorpus((AudioTrack(rng.standard_normal(80), 16000),))
    clean = rng.standard_normal(32)
    hits = np.zeros(2)
    for i in range(10000):
        _, rec = augment_audio(clean, bg, rb, AugmentSpec(seed=derive_seed(6, "acceptance", i)))
        hits += (rec.applied_background, rec.applied_robot)
    rate = hits / 10000
    s = noise_scale(np.full(100, 0.1), np.full(40, 0.5), 1.0)
    scale_err = abs(s - 0.2)
    out = overlay_noise(np.full(100, 0.1), np.full(40, 0.5), 3, 1.0)
    scale_err = max(scale_err, float(np.max(np.abs(out - 0.2))))
    x = rng.standard_normal(16000)
    a = augment_audio(x, bg, rb, AugmentSpec(seed=123))[0]
    b = augment_audio(x.copy(), bg, rb, AugmentSpec(seed=123))[0]
    same = a.tobytes() == b.tobytes()
    ok = bool(np.all((rate >= 0.48) & (rate <= 0.52))) and scale_err < 1e-9 and same
    report(6, "augmentation", ok, f"rates {rate[0]:.4f}/{rate[1]:.4f}, scale error {scale_err:.1e}, identical {same}")


def test_criterion_7_noise_masking():
    cfg = SpecConfig()
    out = mask_below_freq(np.ones((201, 3)), cfg, 500.0)
    zeroed = np.flatnonzero(out[:, 0] == 0)
    ok = masked_bins(cfg, 500.0) == 13 and list(zeroed) == list(range(13))
    report(7, "noise masking", ok, f"{len(zeroed)} bins zeroed, highest {zeroed[-1] * 40} Hz")


def _snr(est, clean):
    return 10 * np.log10(np.sum(clean**2) / np.sum((est - clean) ** 2))


def test_criterion_8_spectral_gating():
    t = np.arange(32000) / 16000
    clean = np.sin(2 * np.pi * 1000 * t)
    gains = []
    mask_ok = True
    for seed in range(5):
        noise = np.random.default_rng(seed).standard_normal(t.shape[0])
        noisy = clean + noise * np.sqrt(np.mean(clean**2) / np.mean(noise**2))
        out, mask = reduce_noise(noisy, return_mask=True)
        gains.append(_snr(out, clean) - _snr(noisy, clean))
        mask_ok &= bool(mask.min() >= 0.0 and mask.max() <= 1.0) and out.shape == noisy.shape
    x = np.random.default_rng(8).standard_normal(16000)
    rt = float(np.max(np.abs(reduce_noise(x, force_mask=1.0) - x)))
    ok = min(gains) >= 10.0 and mask_ok and rt < 1e-6
    report(8, "spectral gating", ok, f"SNR gain min {min(gains):.2f} dB, mask in [0,1] {mask_ok}, round trip {rt:.1e}")


def test_criterion_9_dataset_export():
    cfg = WindowConfig(audio_window_s=2.0)
    with tempfile.TemporaryDirectory() as d:
        ep = load_episode(write_episode(os.path.join(d, "m"), "ten", duration_s=10.0))
        a = export_dataset([ep], cfg, os.path.join(d, "a"), master_seed=7)
        export_dataset([ep], cfg, os.path.join(d, "b"), master_seed=7)
        names = ["dataset.json", "shard-00000.cwav"]
        _, mismatch, errs = filecmp.cmpfiles(os.path.join(d, "a"), os.path.join(d, "b"), names, shallow=False)
        digest = hashlib.sha256(open(os.path.join(d, "a", names[1]), "rb").read()).hexdigest()
        worst = 0.0
        for i in range(len(a)):
            w = a.read_window(i)
            for block in (w["actions"], w["proprio"]):
                o, det = rotation_residuals(sixd_to_rotmat(block[:, 3:9].astype(np.float64)))
                worst = max(worst, o, det)
    elapsed = time.perf_counter() - _T0
    ok = len(a) == 184 and not mismatch and not errs and worst < 1e-6 and elapsed < 60.0
    report(9, "dataset export", ok, f"{len(a)} windows, shards identical {not mismatch}, sha256 {digest[:12]}, "
           f"rotation residual {worst:.1e}, suite {elapsed:.1f} s")


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
