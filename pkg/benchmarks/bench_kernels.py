"""Time the numba and numpy flavour of each kernel on realistic inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Numba timings exclude the first (compiling) call.
"""

import argparse
import time

import numpy as np

from contactwav import _kernels
from contactwav.mel import SpecConfig, analysis_window, stft
from contactwav.resample import ResampleSpec, design_filter, output_length


def _cases():
    rng = np.random.default_rng(0)
    x48 = rng.standard_normal(48000 * 10)
    fb = design_filter(ResampleSpec())
    n_out = output_length(x48.shape[0], ResampleSpec())
    cfg = SpecConfig()
    spec = stft(rng.standard_normal(16000 * 10), cfg)
    frames = np.ascontiguousarray(np.fft.irfft(spec.T, n=cfg.n_fft, axis=-1))
    n_ola = (frames.shape[0] - 1) * cfg.hop_length + cfg.n_fft
    mag = np.ascontiguousarray(np.abs(spec))
    img = rng.random((224, 224, 3))
    x16 = rng.standard_normal(16000 * 10)
    return {
        "polyphase_resample (10 s, 48k->16k)": ("polyphase_resample", (x48, fb.taps, fb.up, fb.down, fb.delay, n_out)),
        "iir_forward_backward (201 x 998)": ("iir_forward_backward", (mag, 0.9992)),
        "frame_energy (10 s @ 16k)": ("frame_energy", (x16, 80, 40)),
        "overlap_add (998 frames)": ("overlap_add", (frames, analysis_window(cfg), cfg.hop_length, n_ola)),
        "hue_shift (224 x 224)": ("hue_shift", (img, 0.05)),
    }


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; both columns use the pure-python loops")
    print(f"{'kernel':40s} {'numpy (ms)':>11s} {'numba (ms)':>11s} {'speedup':>8s}")
    for label, (name, call_args) in _cases().items():
        np_fn = getattr(_kernels, name + "_numpy")
        nb_fn = getattr(_kernels, name + "_numba")
        nb_fn(*call_args)  # compile
        t_np = _time(np_fn, call_args, args.repeat)
        t_nb = _time(nb_fn, call_args, args.repeat)
        print(f"{label:40s} {t_np * 1e3:11.2f} {t_nb * 1e3:11.2f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
