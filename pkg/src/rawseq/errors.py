"""Exception types raised across the package."""


class RawseqError(Exception):
    """Base class for all rawseq errors."""


class DimensionError(RawseqError, ValueError):
    """Array shapes do not agree with the operation's contract."""


class InputTooShortError(RawseqError, ValueError):
    """A sequence is shorter than the minimum an operation requires."""


class ConfigError(RawseqError, ValueError):
    """Invalid network, framing, or run configuration."""


class DatasetError(RawseqError, ValueError):
    """Dataset files are missing, malformed, or internally inconsistent."""


class ModelFormatError(RawseqError, ValueError):
    """A model file is missing, truncated, or carries the wrong magic."""


class EnumerationGuardError(RawseqError, ValueError):
    """A brute-force oracle was asked for an instance too large to enumerate."""


class TrainingDivergedError(RawseqError, RuntimeError):
    """A non-finite objective or gradient was produced during training."""
