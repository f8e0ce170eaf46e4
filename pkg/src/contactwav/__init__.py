"""Turn ear-in-hand manipulation recordings into model-ready training windows."""

__version__ = "0.1.0"

from .errors import ContactwavError
from .episode import AudioTrack, Episode, FrameIndex, FrameRef, PoseSample, audio_segment, load_episode, pose_at
from .mel import SpecConfig, Spectrogram, log_mel_normalize, mel_filterbank, stft_power
from .resample import ResampleSpec, resample
from .rotation import quat_to_rotmat, rotmat_to_sixd, sixd_to_rotmat
from .augment import AugmentRecord, AugmentSpec, NoiseCorpus, augment_audio, augment_image, overlay_noise
from .denoise import GateConfig, mask_below_freq, reduce_noise, smooth_iir_bidirectional
from .latency import LatencyEstimate, TapAnnotation, apply_latency, calibrate_latency, detect_onset
from .windows import WindowConfig, build_window, export_dataset, load_index

__all__ = [
    "ContactwavError",
    "AudioTrack", "Episode", "FrameIndex", "FrameRef", "PoseSample", "audio_segment", "load_episode", "pose_at",
    "SpecConfig", "Spectrogram", "log_mel_normalize", "mel_filterbank", "stft_power",
    "ResampleSpec", "resample",
    "quat_to_rotmat", "rotmat_to_sixd", "sixd_to_rotmat",
    "AugmentRecord", "AugmentSpec", "NoiseCorpus", "augment_audio", "augment_image", "overlay_noise",
    "GateConfig", "mask_below_freq", "reduce_noise", "smooth_iir_bidirectional",
    "LatencyEstimate", "TapAnnotation", "apply_latency", "calibrate_latency", "detect_onset",
    "WindowConfig", "build_window", "export_dataset", "load_index",
]
