"""MFCC front end: pre-emphasis, windowing, spectrum, mel filterbank, cepstra, deltas."""

import hashlib
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer, segment
from .errors import ConfigError

ENERGY_FLOOR = 1e-10


@dataclass
class FeatureConfig:
    """Knobs for the cepstral front end.

    fft_size=None and high_freq_hz=None resolve at use time to the next
    power of two covering one frame and to half the sample rate.
    """

    preemphasis_a: float = 0.97
    frame_ms: float = 25.0
    overlap_fraction: float = 0.5
    window_a: float = 0.46
    fft_size: int | None = None
    num_filters: int = 26
    num_ceps: int = 13
    delta_window: int = 2
    low_freq_hz: float = 0.0
    high_freq_hz: float | None = None

    def __post_init__(self):
        if not 0 <= self.preemphasis_a < 1:
            raise ConfigError("preemphasis_a must be in [0, 1)")
        if self.frame_ms <= 0:
            raise ConfigError("frame_ms must be positive")
        if not 0 <= self.overlap_fraction < 1:
            raise ConfigError("overlap_fraction must be in [0, 1)")
        if not 0 < self.num_ceps <= self.num_filters:
            raise ConfigError("need 0 < num_ceps <= num_filters")
        if self.delta_window < 1:
            raise ConfigError("delta_window must be >= 1")
        if self.fft_size is not None and not _is_power_of_two(self.fft_size):
            raise ConfigError("fft_size must be a power of two")
        if self.high_freq_hz is not None and self.low_freq_hz >= self.high_freq_hz:
            raise ConfigError("low_freq_hz must be below high_freq_hz")

    def frame_len(self, sample_rate_hz: int) -> int:
        return int(self.frame_ms * sample_rate_hz / 1000 + 0.5)

    def resolve_fft_size(self, sample_rate_hz: int) -> int:
        frame_len = self.frame_len(sample_rate_hz)
        if self.fft_size is not None:
            if self.fft_size < frame_len:
                raise ConfigError(
                    f"fft_size {self.fft_size} smaller than frame length {frame_len}"
                )
            return self.fft_size
        return _next_power_of_two(frame_len)

    def resolve_high_freq(self, sample_rate_hz: int) -> float:
        high = self.high_freq_hz if self.high_freq_hz is not None else sample_rate_hz / 2
        if high > sample_rate_hz / 2:
            raise ConfigError(
                f"high_freq_hz {high} exceeds Nyquist for rate {sample_rate_hz}"
            )
        if self.low_freq_hz >= high:
            raise ConfigError("low_freq_hz must be below high_freq_hz")
        return high

    def fingerprint(self, sample_rate_hz: int) -> str:
        """Short hash binding features (and models) to this config and rate."""
        text = "|".join(
            repr(v)
            for v in (
                self.preemphasis_a,
                self.frame_ms,
                self.overlap_fraction,
                self.window_a,
                self.fft_size,
                self.num_filters,
                self.num_ceps,
                self.delta_window,
                self.low_freq_hz,
                self.high_freq_hz,
                sample_rate_hz,
            )
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class FeatureMatrix:
    """Per-frame feature vectors of length 3 * num_ceps."""

    rows: np.ndarray
    num_frames: int
    config_fingerprint: str

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise ValueError("feature rows must form a 2-D matrix")
        if self.num_frames != self.rows.shape[0]:
            raise ValueError("num_frames disagrees with row count")
        if not np.all(np.isfinite(self.rows)):
            raise ValueError("feature rows contain non-finite values")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _next_power_of_two(n: int) -> int:
    size = 1
    while size < n:
        size *= 2
    return size


def preemphasize(buf: AudioBuffer, a: float) -> AudioBuffer:
    """First-order high-pass y(n) = x(n) - a*x(n-1), with x(-1) = 0."""
    if not 0 <= a < 1:
        raise ValueError("pre-emphasis coefficient must be in [0, 1)")
    x = buf.samples
    if len(x) == 0:
        return AudioBuffer(x.copy(), buf.sample_rate_hz)
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - a * x[:-1]
    return AudioBuffer(y, buf.sample_rate_hz)


def hamming_coefficients(n: int, a: float) -> np.ndarray:
    """Window weights w(k) = (1-a) - a*cos(2*pi*k/(n-1)) for k = 0..n-1."""
    if n < 1:
        raise ValueError("window length must be at least 1")
    if n == 1:
        return np.array([1.0 - 2.0 * a])
    k = np.arange(n)
    return (1.0 - a) - a * np.cos(2.0 * np.pi * k / (n - 1))


def hamming_window(frame: np.ndarray, a: float) -> np.ndarray:
    """Apply the tapered window elementwise to one frame."""
    frame = np.asarray(frame, dtype=np.float64)
    return frame * hamming_coefficients(len(frame), a)


def dft_magnitude(frame: np.ndarray, fft_size: int) -> np.ndarray:
    """Magnitudes |X(k)| for k = 0..fft_size-1, zero-padding the frame."""
    frame = np.asarray(frame, dtype=np.float64)
    if len(frame) > fft_size:
        raise ValueError("frame longer than fft_size")
    return np.abs(np.fft.fft(frame, n=fft_size))


def hz_to_mel(f: float) -> float:
    """Perceptual frequency warp 2595 * log10(1 + f/700)."""
    if np.any(np.asarray(f) < 0):
        raise ValueError("frequency must be nonnegative")
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m: float) -> float:
    """Inverse of hz_to_mel, used to place filter edges."""
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_weights(
    num_filters: int, fft_size: int, sample_rate_hz: int, low_hz: float, high_hz: float
) -> np.ndarray:
    """Triangular filter matrix of shape (num_filters, fft_size // 2 + 1).

    Centers sit at equal mel spacing between the band edges; each filter
    rises from the previous center and falls to the next, with unit peak.
    """
    edges_mel = np.linspace(hz_to_mel(low_hz), hz_to_mel(high_hz), num_filters + 2)
    edges_hz = mel_to_hz(edges_mel)
    bin_freqs = np.arange(fft_size // 2 + 1) * sample_rate_hz / fft_size

    weights = np.zeros((num_filters, fft_size // 2 + 1))
    for m in range(num_filters):
        left, center, right = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        weights[m] = np.maximum(0.0, np.minimum(rising, falling))
    return weights


def mel_filterbank(
    magnitudes: np.ndarray, cfg: FeatureConfig, sample_rate_hz: int
) -> np.ndarray:
    """Per-filter energies s(m) = sum_k w_m(k) * |X(k)|^2 over the half spectrum."""
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    fft_size = cfg.resolve_fft_size(sample_rate_hz)
    needed = fft_size // 2 + 1
    if len(magnitudes) < needed:
        raise ConfigError(
            f"spectrum has {len(magnitudes)} bins, filterbank needs {needed}"
        )
    high = cfg.resolve_high_freq(sample_rate_hz)
    weights = mel_filter_weights(
        cfg.num_filters, fft_size, sample_rate_hz, cfg.low_freq_hz, high
    )
    return weights @ (magnitudes[:needed] ** 2)


def _dct_basis(num_ceps: int, num_filters: int) -> np.ndarray:
    n = np.arange(num_ceps)[:, None]
    m = np.arange(num_filters)[None, :]
    return np.cos(np.pi * n * (m + 0.5) / num_filters)


def mfcc(energies: np.ndarray, num_ceps: int) -> np.ndarray:
    """Cepstra c(n) = sum_m log10(max(s(m), eps)) * cos(pi*n*(m+0.5)/M)."""
    energies = np.asarray(energies, dtype=np.float64)
    if np.any(energies < 0):
        raise ValueError("filterbank energies must be nonnegative")
    logs = np.log10(np.maximum(energies, ENERGY_FLOOR))
    return _dct_basis(num_ceps, len(energies)) @ logs


def delta_features(ceps: np.ndarray, window: int) -> np.ndarray:
    """Temporal regression slope over +/-window frames, edges clamped."""
    if window < 1:
        raise ValueError("delta window must be >= 1")
    ceps = np.asarray(ceps, dtype=np.float64)
    num_frames = ceps.shape[0]
    idx = np.arange(num_frames)
    numerator = np.zeros_like(ceps)
    for i in range(1, window + 1):
        ahead = np.clip(idx + i, 0, num_frames - 1)
        behind = np.clip(idx - i, 0, num_frames - 1)
        numerator += i * (ceps[ahead] - ceps[behind])
    denominator = 2 * sum(i * i for i in range(1, window + 1))
    return numerator / denominator


def extract(buf: AudioBuffer, cfg: FeatureConfig) -> FeatureMatrix:
    """Full pipeline: pre-emphasis, framing, window, spectrum, mel, DCT, deltas.

    Rows are frames; columns are num_ceps cepstra followed by their deltas
    and delta-deltas (39 at defaults).
    """
    high = cfg.resolve_high_freq(buf.sample_rate_hz)
    fft_size = cfg.resolve_fft_size(buf.sample_rate_hz)

    emphasized = preemphasize(buf, cfg.preemphasis_a)
    frames = segment(emphasized, cfg.frame_ms, cfg.overlap_fraction)
    window = hamming_coefficients(frames.frame_len, cfg.window_a)
    spectra = np.abs(np.fft.fft(frames.frames * window, n=fft_size, axis=1))

    weights = mel_filter_weights(
        cfg.num_filters, fft_size, buf.sample_rate_hz, cfg.low_freq_hz, high
    )
    energies = (spectra[:, : fft_size // 2 + 1] ** 2) @ weights.T
    ceps = np.log10(np.maximum(energies, ENERGY_FLOOR)) @ _dct_basis(
        cfg.num_ceps, cfg.num_filters
    ).T
    velocity = delta_features(ceps, cfg.delta_window)
    acceleration = delta_features(velocity, cfg.delta_window)

    rows = np.hstack([ceps, velocity, acceleration])
    return FeatureMatrix(rows, rows.shape[0], cfg.fingerprint(buf.sample_rate_hz))
