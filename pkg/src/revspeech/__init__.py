"""Batch speech-analysis toolkit.

Enhances noisy recordings, extracts cepstral features, recognizes isolated
words on forward and time-reversed audio with per-word Gaussian mixture
models, and assembles a requirements report that pairs forward transcripts
with reversed-audio transcripts and flags inconsistencies.
"""

from .audio import AudioBuffer, FrameSequence, read_wav, reverse, segment, write_wav
from .enhance import (
    EnhanceConfig,
    NoiseProfile,
    denoise,
    estimate_noise,
    spectral_subtract,
    wiener_filter,
)
from .features import FeatureConfig, FeatureMatrix, extract
from .gmm import GmmModel, TrainingReport, load_model, log_likelihood, save_model, train
from .recognizer import (
    EndpointConfig,
    SegmentHypothesis,
    Transcript,
    Vocabulary,
    classify_segment,
    segment_utterances,
    transcribe,
)
from .srsdoc import Lexicon, ReversalPair, SrsReport, build_report, parse_report, render

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "EndpointConfig",
    "EnhanceConfig",
    "FeatureConfig",
    "FeatureMatrix",
    "FrameSequence",
    "GmmModel",
    "Lexicon",
    "NoiseProfile",
    "ReversalPair",
    "SegmentHypothesis",
    "SrsReport",
    "Transcript",
    "TrainingReport",
    "Vocabulary",
    "build_report",
    "classify_segment",
    "denoise",
    "estimate_noise",
    "extract",
    "load_model",
    "log_likelihood",
    "parse_report",
    "read_wav",
    "render",
    "reverse",
    "save_model",
    "segment",
    "segment_utterances",
    "spectral_subtract",
    "train",
    "transcribe",
    "wiener_filter",
    "write_wav",
]
