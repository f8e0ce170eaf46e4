"""Command line for contactwav.

JSON results go to stdout, diagnostics and the resolved-config header to
stderr. Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import glob
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .augment import AugmentSpec, augment_audio, load_corpus
from .container import ContainerError, read_all
from .denoise import GateConfig, reduce_noise
from .episode import AudioTrack, load_episode, read_wav, save_manifest, write_wav
from .errors import ContactwavError
from .latency import TapAnnotation, apply_latency, calibrate_latency, detect_tap_onset
from .mel import SpecConfig, log_mel_normalize
from .resample import resample_to
from .windows import WindowConfig, export_dataset, load_index

log = logging.getLogger("contactwav")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise UsageError(message)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed (u64)")
    p.add_argument("--jobs", type=int, default=1, help="parallel episode workers")
    p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="contactwav", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"contactwav {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("calibrate", parents=[common], help="estimate audio latency from tap annotations")
    p.add_argument("--episode", required=True)
    p.add_argument("--taps", required=True)
    p.add_argument("--image-latency", type=float, required=True)
    p.add_argument("--k-sigma", type=float, default=6.0)
    p.add_argument("--write", action="store_true", help="rewrite the manifest's latency_s")

    p = sub.add_parser("preprocess", parents=[common], help="resample a WAV (48 kHz -> 16 kHz by default)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rate", type=int, default=16000)

    p = sub.add_parser("augment", parents=[common], help="overlay background / robot noise on a WAV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bg-noise")
    p.add_argument("--robot-noise")
    p.add_argument("--p-background", type=float, default=0.5)
    p.add_argument("--p-robot", type=float, default=0.5)
    p.add_argument("--gain", type=float, default=1.0)
    p.add_argument("--rate", type=int, default=16000)

    p = sub.add_parser("denoise", parents=[common], help="spectral-gating noise reduction")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--time-constant", type=float, default=GateConfig.time_constant_s)
    p.add_argument("--n-std", type=float, default=GateConfig.n_std_thresh)
    p.add_argument("--rate", type=int, default=16000)

    p = sub.add_parser("maskfreq", parents=[common], help="log-mel spectrogram with low-frequency rows masked")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--cutoff-hz", type=float, default=500.0)
    _dump_args(p)

    p = sub.add_parser("export", parents=[common], help="export training windows")
    p.add_argument("--manifest-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--audio-window", type=float, required=True)
    p.add_argument("--augment", action="store_true")
    p.add_argument("--bg-noise")
    p.add_argument("--robot-noise")
    p.add_argument("--mask-below-hz", type=float)
    p.add_argument("--action-frame", choices=["absolute", "relative"], default="absolute")
    p.add_argument("--horizon", type=int, default=16)

    p = sub.add_parser("inspect", parents=[common], help="summarize a WAV, CWAV shard or dataset index")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--t-end", type=float, help="end of the audio window (s); default: end of recording")
    p.add_argument("--duration", type=float, help="audio window length (s); default: whole recording")
    _dump_args(p)
    return parser


def _dump_args(p):
    p.add_argument("--csv", help="write spectrogram CSV (rows = mel bins low->high, columns = frames)")
    p.add_argument("--pgm", help="write spectrogram as 8-bit grayscale PGM")
    p.add_argument("--npy", help="write spectrogram as .npy")


def write_csv(path, values):
    np.savetxt(path, values, delimiter=",", fmt="%.9g")


def write_pgm(path, values):
    """Row 0 of the image is the lowest mel bin; [-1, 1] maps to 0..255."""
    v = np.clip(np.round((np.asarray(values) + 1.0) * 127.5), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{v.shape[1]} {v.shape[0]}\n255\n".encode("ascii"))
        fh.write(v.tobytes())


def _dump_spec(args, values):
    for kind, fn in (("csv", write_csv), ("pgm", write_pgm), ("npy", np.save)):
        path = getattr(args, kind)
        if path:
            fn(path, values)


def _emit(obj):
    json.dump(obj, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


def _wav_16k(path, rate=16000):
    return resample_to(read_wav(path), rate)


def cmd_calibrate(args):
    episode = load_episode(args.episode)
    with open(args.taps) as fh:
        data = json.load(fh)
    entries = data["taps"] if isinstance(data, dict) else data
    pairs = []
    for e in entries:
        tap = TapAnnotation(float(e["frame_time_s"]), tuple(e["search_window_s"]))
        onset = e.get("onset_time_s")
        if onset is None:
            onset = detect_tap_onset(episode.audio, tap, args.k_sigma)
        pairs.append((tap, float(onset)))
    est = calibrate_latency(pairs, args.image_latency)
    out = est.to_dict()
    out["taps"] = [{"frame_time_s": t.frame_time_s, "onset_time_s": o} for t, o in pairs]
    if args.write:
        save_manifest(apply_latency(episode, est), args.episode)
        out["manifest_updated"] = args.episode
    _emit(out)


def cmd_preprocess(args):
    track = resample_to(read_wav(args.input), args.rate)
    write_wav(args.out, track)
    _emit({"out": args.out, "sample_rate_hz": track.sample_rate_hz, "samples": len(track)})


def cmd_augment(args):
    track = _wav_16k(args.input, args.rate)
    bg = load_corpus(args.bg_noise, args.rate) if args.bg_noise else None
    robot = load_corpus(args.robot_noise, args.rate) if args.robot_noise else None
    spec = AugmentSpec(args.seed, args.p_background, args.p_robot, args.gain)
    samples, record = augment_audio(track.samples, bg, robot, spec)
    write_wav(args.out, AudioTrack(np.clip(samples, -1.0, 1.0), track.sample_rate_hz))
    _emit({"out": args.out, "record": record.to_dict()})


def cmd_denoise(args):
    track = _wav_16k(args.input, args.rate)
    cfg = SpecConfig(sample_rate_hz=args.rate)
    gate = GateConfig(time_constant_s=args.time_constant, n_std_thresh=args.n_std)
    out = reduce_noise(track.samples, cfg, gate)
    write_wav(args.out, AudioTrack(np.clip(out, -1.0, 1.0), track.sample_rate_hz))
    _emit({"out": args.out, "samples": int(out.shape[0])})


def cmd_maskfreq(args):
    track = _wav_16k(args.input)
    spec = log_mel_normalize(track.samples, SpecConfig(), mask_below_hz=args.cutoff_hz)
    _dump_spec(args, spec.values)
    _emit({"shape": list(spec.shape), "cutoff_hz": args.cutoff_hz})


def cmd_export(args):
    manifests = sorted(glob.glob(os.path.join(args.manifest_dir, "*.json")))
    episodes = [load_episode(m) for m in manifests]
    augment = AugmentSpec(seed=args.seed) if args.augment else None
    cfg = WindowConfig(
        audio_window_s=args.audio_window,
        action_horizon=args.horizon,
        augment=augment,
        mask_below_hz=args.mask_below_hz,
        action_frame=args.action_frame,
    )
    corpora = None
    if args.augment:
        corpora = (
            load_corpus(args.bg_noise, cfg.spec.sample_rate_hz) if args.bg_noise else None,
            load_corpus(args.robot_noise, cfg.spec.sample_rate_hz) if args.robot_noise else None,
        )
    index = export_dataset(episodes, cfg, args.out, master_seed=args.seed, corpora=corpora, jobs=args.jobs)
    _emit({"index": index.path, "episodes": len(episodes), "windows": len(index), "shards": index.shards})


def cmd_inspect(args):
    path = args.input
    if path.endswith(".json") or os.path.isdir(path):
        index = load_index(path)
        _emit({"windows": len(index), "shards": index.shards, "format": index.meta.get("format")})
        return
    if path.endswith(".cwav"):
        try:
            tensors = read_all(path)
        except ContainerError as exc:
            raise ContactwavError(str(exc)) from exc
        _emit({"tensors": len(tensors), "shapes": [list(t.shape) for t in tensors[:8]]})
        return
    track = _wav_16k(path)
    samples = track.samples
    if args.duration is not None or args.t_end is not None:
        t_end = args.t_end if args.t_end is not None else track.duration_s
        dur = args.duration if args.duration is not None else t_end
        i1 = int(round(t_end * track.sample_rate_hz))
        i0 = max(0, i1 - int(round(dur * track.sample_rate_hz)))
        samples = samples[i0:i1]
    spec = log_mel_normalize(samples, SpecConfig())
    _dump_spec(args, spec.values)
    _emit({
        "samples": int(samples.shape[0]),
        "sample_rate_hz": track.sample_rate_hz,
        "shape": list(spec.shape),
        "min": float(spec.values.min()),
        "max": float(spec.values.max()),
    })


COMMANDS = {
    "calibrate": cmd_calibrate,
    "preprocess": cmd_preprocess,
    "augment": cmd_augment,
    "denoise": cmd_denoise,
    "maskfreq": cmd_maskfreq,
    "export": cmd_export,
    "inspect": cmd_inspect,
}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    resolved = {k: v for k, v in sorted(vars(args).items())}
    print("# config " + json.dumps(resolved, sort_keys=True), file=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except (ContactwavError, OSError, KeyError, ValueError) as exc:
        print(f"contactwav {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())
