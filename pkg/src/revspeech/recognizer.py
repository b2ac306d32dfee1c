"""Isolated-word recognition over per-label GMMs, forward or time-reversed.

Utterances are located by energy endpointing, scored against every model in
the vocabulary by average per-frame log-likelihood, and emitted as ordered
transcript segments. Segments beyond roughly 30 seconds are worth splitting
upstream; the endpointing rules below never enforce a maximum length.
"""

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer, reverse, segment
from .enhance import EnhanceConfig, denoise, estimate_noise
from .errors import FingerprintMismatchError
from .features import FeatureConfig, FeatureMatrix, extract
from .gmm import GmmModel, _frame_log_likelihoods

DIRECTIONS = ("forward", "reverse")


@dataclass
class EndpointConfig:
    """Energy endpointing: smoothed energies, percentile threshold, region rules."""

    frame_ms: float = 25.0
    overlap_fraction: float = 0.5
    smooth_frames: int = 5
    energy_ratio: float = 3.0
    merge_gap_ms: float = 200.0
    min_utterance_ms: float = 250.0


@dataclass
class Vocabulary:
    entries: dict[str, GmmModel]
    feature_fingerprint: str

    def __post_init__(self):
        if len(self.entries) < 2:
            raise ValueError("vocabulary needs at least 2 labels")
        dims = {model.dim for model in self.entries.values()}
        if len(dims) != 1:
            raise ValueError("vocabulary models disagree on feature dimension")
        prints = {model.feature_fingerprint for model in self.entries.values()}
        if prints != {self.feature_fingerprint}:
            raise FingerprintMismatchError(
                "vocabulary models carry mixed feature fingerprints"
            )

    @classmethod
    def from_models(cls, models: list[GmmModel]) -> "Vocabulary":
        entries = {}
        for model in models:
            if model.label in entries:
                raise ValueError(f"duplicate label {model.label!r}")
            entries[model.label] = model
        if not models:
            raise ValueError("vocabulary needs at least 2 labels")
        return cls(entries, models[0].feature_fingerprint)


@dataclass
class SegmentHypothesis:
    start_s: float
    end_s: float
    label: str
    score: float
    margin: float
    direction: str

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise ValueError("segment must have positive duration")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")


@dataclass
class Transcript:
    segments: list[SegmentHypothesis] = field(default_factory=list)
    direction: str = "forward"
    source_duration_s: float = 0.0


def classify_segment(
    features: FeatureMatrix, vocab: Vocabulary
) -> tuple[str, float, float]:
    """Best label by average per-frame log-likelihood, with runner-up margin.

    Ties break toward the lexicographically smallest label.
    """
    if features.num_frames == 0:
        raise ValueError("cannot classify an empty feature matrix")
    if features.config_fingerprint != vocab.feature_fingerprint:
        raise FingerprintMismatchError(
            f"features fingerprint {features.config_fingerprint} does not match "
            f"vocabulary fingerprint {vocab.feature_fingerprint}"
        )
    scores = {
        label: float(np.mean(_frame_log_likelihoods(model, features.rows)))
        for label, model in vocab.entries.items()
    }
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    best_label, best_score = ranked[0]
    margin = best_score - ranked[1][1] if len(ranked) > 1 else 0.0
    return best_label, best_score, margin


def segment_utterances(
    buf: AudioBuffer, cfg: EndpointConfig | None = None
) -> list[tuple[float, float]]:
    """Locate speech-like regions by smoothed frame energy.

    Regions separated by less than merge_gap_ms merge; regions shorter than
    min_utterance_ms drop. When nothing qualifies the whole buffer is
    returned as a single region.
    """
    cfg = cfg or EndpointConfig()
    whole = [(0.0, buf.duration_s)] if len(buf.samples) else [(0.0, 0.0)]
    if len(buf.samples) == 0:
        return whole

    frames = segment(buf, cfg.frame_ms, cfg.overlap_fraction)
    energies = np.mean(frames.frames**2, axis=1)
    kernel = np.ones(cfg.smooth_frames)
    smoothed = np.convolve(energies, kernel, mode="same") / np.convolve(
        np.ones_like(energies), kernel, mode="same"
    )
    threshold = cfg.energy_ratio * np.percentile(smoothed, 10)
    active = smoothed > threshold
    if not np.any(active):
        return whole

    # contiguous active runs, trimmed back to frames that are loud on their own
    runs = []
    start = None
    for i, flag in enumerate(active):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(active) - 1))

    trimmed = []
    for lo, hi in runs:
        while lo <= hi and energies[lo] <= threshold:
            lo += 1
        while hi >= lo and energies[hi] <= threshold:
            hi -= 1
        if lo <= hi:
            trimmed.append((lo, hi))
    if not trimmed:
        return whole

    sr = buf.sample_rate_hz
    hop, frame_len = frames.hop, frames.frame_len
    regions = [
        (float(lo * hop / sr), float(min(hi * hop + frame_len, len(buf.samples)) / sr))
        for lo, hi in trimmed
    ]

    merged = [regions[0]]
    for start_s, end_s in regions[1:]:
        if start_s - merged[-1][1] < cfg.merge_gap_ms / 1000.0:
            merged[-1] = (merged[-1][0], end_s)
        else:
            merged.append((start_s, end_s))

    kept = [r for r in merged if r[1] - r[0] >= cfg.min_utterance_ms / 1000.0]
    return kept or whole


def transcribe(
    buf: AudioBuffer,
    vocab: Vocabulary,
    direction: str,
    enhance_cfg: EnhanceConfig | None = None,
    feature_cfg: FeatureConfig | None = None,
    endpoint_cfg: EndpointConfig | None = None,
) -> Transcript:
    """Enhance, endpoint, and classify a recording in the given direction.

    direction="reverse" time-reverses the buffer first; segment times then
    refer to the reversed timeline (forward time is duration minus the
    mirrored bounds).
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    enhance_cfg = enhance_cfg or EnhanceConfig()
    feature_cfg = feature_cfg or FeatureConfig()

    work = reverse(buf) if direction == "reverse" else buf
    profile = estimate_noise(work, enhance_cfg)
    cleaned = denoise(work, profile, enhance_cfg)

    sr = cleaned.sample_rate_hz
    segments = []
    # endpoint on the raw signal: enhancement flattens the silence/speech
    # energy contrast the percentile threshold relies on
    for start_s, end_s in segment_utterances(work, endpoint_cfg):
        lo = int(start_s * sr + 0.5)
        hi = int(end_s * sr + 0.5)
        piece = AudioBuffer(cleaned.samples[lo:hi], sr)
        feats = extract(piece, feature_cfg)
        label, score, margin = classify_segment(feats, vocab)
        segments.append(SegmentHypothesis(start_s, end_s, label, score, margin, direction))

    return Transcript(segments, direction, buf.duration_s)
