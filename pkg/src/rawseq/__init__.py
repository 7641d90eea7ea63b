"""Sequence labeling over raw sampled signals: a small convolutional
network scores each analysis window, a linear-chain model scores label
transitions, and both are trained jointly by exact gradient ascent on the
chain log-likelihood.
"""

from . import crf, data, gradcheck, kernels, network, presets, trainer
from .data import FramingConfig, LabelAlphabet, SynthConfig, synth_generate
from .errors import (
    ConfigError,
    DatasetError,
    DimensionError,
    EnumerationGuardError,
    InputTooShortError,
    ModelFormatError,
    RawseqError,
    TrainingDivergedError,
)
from .model import SequenceModel, build_model, load_model
from .network import NetworkConfig, StageSpec

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DatasetError",
    "DimensionError",
    "EnumerationGuardError",
    "FramingConfig",
    "InputTooShortError",
    "LabelAlphabet",
    "ModelFormatError",
    "NetworkConfig",
    "RawseqError",
    "SequenceModel",
    "StageSpec",
    "SynthConfig",
    "TrainingDivergedError",
    "build_model",
    "crf",
    "data",
    "gradcheck",
    "kernels",
    "load_model",
    "network",
    "presets",
    "synth_generate",
    "trainer",
    "__version__",
]
