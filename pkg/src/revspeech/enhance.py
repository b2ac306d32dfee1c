"""Additive-noise removal over an STFT: spectral subtraction and Wiener filtering.

Both methods estimate a noise magnitude spectrum from low-energy frames,
attenuate per-bin magnitudes, keep the noisy phase, and reconstruct by
overlap-add with window-power compensation.
"""

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer, segment
from .errors import ConfigError
from .features import hamming_coefficients, _is_power_of_two, _next_power_of_two

METHODS = ("spectral_subtraction", "wiener")

# decision-directed smoothing for the Wiener a-priori SNR
DD_SMOOTHING = 0.98
PRIOR_SNR_FLOOR = 0.003
POSTERIOR_SNR_CAP = 1e6


@dataclass
class EnhanceConfig:
    method: str = "spectral_subtraction"
    alpha: float = 2.0
    beta: float = 0.01
    fft_size: int | None = None
    frame_ms: float = 25.0
    overlap_fraction: float = 0.5
    window_a: float = 0.46
    vad_energy_ratio: float = 2.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.alpha < 1:
            raise ConfigError("alpha must be >= 1")
        if not 0 <= self.beta < 1:
            raise ConfigError("beta must be in [0, 1)")
        if self.frame_ms <= 0:
            raise ConfigError("frame_ms must be positive")
        if not 0 <= self.overlap_fraction < 1:
            raise ConfigError("overlap_fraction must be in [0, 1)")
        if self.vad_energy_ratio <= 1:
            raise ConfigError("vad_energy_ratio must be > 1")
        if self.fft_size is not None and not _is_power_of_two(self.fft_size):
            raise ConfigError("fft_size must be a power of two")

    def resolve_fft_size(self, sample_rate_hz: int) -> int:
        frame_len = int(self.frame_ms * sample_rate_hz / 1000 + 0.5)
        if self.fft_size is not None:
            if self.fft_size < frame_len:
                raise ConfigError(
                    f"fft_size {self.fft_size} smaller than frame length {frame_len}"
                )
            return self.fft_size
        return _next_power_of_two(frame_len)


@dataclass
class NoiseProfile:
    """Per-bin mean magnitude of the noise spectrum (full fft_size bins)."""

    mean_magnitude: np.ndarray
    frames_used: int

    def __post_init__(self):
        self.mean_magnitude = np.asarray(self.mean_magnitude, dtype=np.float64)
        if np.any(self.mean_magnitude < 0):
            raise ValueError("noise magnitudes must be nonnegative")
        if self.frames_used < 1:
            raise ValueError("frames_used must be >= 1")


def _analyze(buf: AudioBuffer, cfg: EnhanceConfig):
    """Windowed complex spectra plus the pieces needed for resynthesis."""
    fft_size = cfg.resolve_fft_size(buf.sample_rate_hz)
    frames = segment(buf, cfg.frame_ms, cfg.overlap_fraction)
    window = hamming_coefficients(frames.frame_len, cfg.window_a)
    spectra = np.fft.fft(frames.frames * window, n=fft_size, axis=1)
    return spectra, frames, window, fft_size


def _overlap_add(
    processed: np.ndarray, frames, window: np.ndarray, out_len: int
) -> np.ndarray:
    """Inverse-transform each frame, window again, and normalize by window power."""
    frame_len = frames.frame_len
    num_frames = processed.shape[0]
    synthesized = np.real(np.fft.ifft(processed, axis=1))[:, :frame_len] * window

    total = (num_frames - 1) * frames.hop + frame_len
    acc = np.zeros(total)
    power = np.zeros(total)
    for i in range(num_frames):
        start = i * frames.hop
        acc[start : start + frame_len] += synthesized[i]
        power[start : start + frame_len] += window * window
    compensated = np.where(power >= 1e-8, acc / np.where(power >= 1e-8, power, 1.0), acc)
    return compensated[:out_len]


def estimate_noise(buf: AudioBuffer, cfg: EnhanceConfig) -> NoiseProfile:
    """Average the spectra of the quietest frames.

    Frames with energy below vad_energy_ratio times the 10th-percentile
    frame energy count as silence; if none qualify the single quietest
    frame is used, so the estimate is always defined.
    """
    spectra, frames, _, _ = _analyze(buf, cfg)
    energies = np.mean(frames.frames**2, axis=1)
    threshold = cfg.vad_energy_ratio * np.percentile(energies, 10)
    selected = energies < threshold
    if not np.any(selected):
        selected = np.zeros(len(energies), dtype=bool)
        selected[np.argmin(energies)] = True
    magnitude = np.mean(np.abs(spectra[selected]), axis=0)
    return NoiseProfile(magnitude, int(np.count_nonzero(selected)))


def subtract_magnitudes(
    magnitudes: np.ndarray, noise: np.ndarray, alpha: float, beta: float
) -> np.ndarray:
    """Oversubtraction with a spectral floor: max(|Y| - alpha*n, beta*|Y|)."""
    return np.maximum(magnitudes - alpha * noise, beta * magnitudes)


def _check_profile(noise: NoiseProfile, cfg: EnhanceConfig, sample_rate_hz: int) -> int:
    fft_size = cfg.resolve_fft_size(sample_rate_hz)
    if len(noise.mean_magnitude) != fft_size:
        raise ConfigError(
            f"noise profile has {len(noise.mean_magnitude)} bins, config expects {fft_size}"
        )
    return fft_size


def spectral_subtract(
    buf: AudioBuffer, noise: NoiseProfile, cfg: EnhanceConfig
) -> AudioBuffer:
    """Subtract the noise magnitude per frame, keeping the noisy phase."""
    _check_profile(noise, cfg, buf.sample_rate_hz)
    spectra, frames, window, _ = _analyze(buf, cfg)
    magnitudes = np.abs(spectra)
    enhanced = subtract_magnitudes(magnitudes, noise.mean_magnitude, cfg.alpha, cfg.beta)
    gain = np.where(magnitudes > 0, enhanced / np.where(magnitudes > 0, magnitudes, 1.0), 0.0)
    out = _overlap_add(spectra * gain, frames, window, len(buf.samples))
    return AudioBuffer(out, buf.sample_rate_hz)


def wiener_filter(
    buf: AudioBuffer, noise: NoiseProfile, cfg: EnhanceConfig
) -> AudioBuffer:
    """Per-bin gain xi/(1+xi) with decision-directed a-priori SNR tracking.

    Zero-noise bins take a capped a-posteriori SNR instead of dividing by
    zero. The first frame seeds the recursion with the noisy magnitude.
    """
    _check_profile(noise, cfg, buf.sample_rate_hz)
    spectra, frames, window, _ = _analyze(buf, cfg)
    magnitudes = np.abs(spectra)
    noise_power = noise.mean_magnitude**2

    def snr(power: np.ndarray) -> np.ndarray:
        out = np.full_like(power, POSTERIOR_SNR_CAP)
        np.divide(power, noise_power, out=out, where=noise_power > 0)
        return np.minimum(out, POSTERIOR_SNR_CAP)

    processed = np.empty_like(spectra)
    previous_enhanced = magnitudes[0]
    for t in range(spectra.shape[0]):
        posterior = snr(magnitudes[t] ** 2)
        prior = DD_SMOOTHING * snr(previous_enhanced**2) + (1 - DD_SMOOTHING) * np.maximum(
            posterior - 1.0, 0.0
        )
        prior = np.maximum(prior, PRIOR_SNR_FLOOR)
        gain = prior / (1.0 + prior)
        processed[t] = spectra[t] * gain
        previous_enhanced = gain * magnitudes[t]

    out = _overlap_add(processed, frames, window, len(buf.samples))
    return AudioBuffer(out, buf.sample_rate_hz)


def denoise(buf: AudioBuffer, noise: NoiseProfile, cfg: EnhanceConfig) -> AudioBuffer:
    """Dispatch on cfg.method."""
    if cfg.method == "wiener":
        return wiener_filter(buf, noise, cfg)
    return spectral_subtract(buf, noise, cfg)
