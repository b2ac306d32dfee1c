"""Exception types shared across the toolkit."""


class RevspeechError(Exception):
    """Base class for all toolkit errors."""


class WavFormatError(RevspeechError):
    """A WAV file is structurally malformed (bad magic, inconsistent sizes)."""


class UnsupportedWavError(RevspeechError):
    """A WAV file uses an encoding the toolkit does not read (float, 24-bit, ...)."""


class ConfigError(RevspeechError):
    """A configuration value is invalid or inconsistent with the data."""


class ModelFormatError(RevspeechError):
    """A model file failed to parse or violates model invariants."""


class FingerprintMismatchError(RevspeechError):
    """Features and models were produced under different configurations."""


class InsufficientDataError(RevspeechError):
    """Training data cannot support the requested model size."""


class LexiconFormatError(RevspeechError):
    """A lexicon file could not be parsed."""


class ReportFormatError(RevspeechError):
    """A structured report document could not be parsed."""
