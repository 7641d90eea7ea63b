"""Named architecture presets.

The four 16 kHz presets mirror the best originally-reported configurations
of the raw-signal recognizer at three TIMIT label granularities plus WSJ;
``tiny`` is a small 8 kHz configuration sized for the synthetic corpus and
for tests. Class counts are defaults: training replaces them with the size
of the dataset alphabet.

Interpretation caveats: the original values state one pooling width per
configuration without fixing the number of pooling layers. Presets apply
pooling after every convolution where that fits the window; for
``timit117`` a width-4 pool after all three convolutions would need a
1760-sample receptive field, more than its 1600-sample window, so that
preset pools after the first two stages only. The reported reference
parameter counts are not reconstructable from the stated values under any
pooling placement and are therefore displayed for comparison, never
asserted (see README).
"""

from dataclasses import dataclass

import numpy as np

from .data import FramingConfig
from .errors import ConfigError
from .network import NetworkConfig, StageSpec, parameter_shapes, receptive_field, stage_output_shape


@dataclass(frozen=True)
class Preset:
    name: str
    framing: FramingConfig
    stages: tuple
    hidden_units: int
    default_classes: int
    reference_params: int | None = None  # published count, for comparison only


def _stages(kws, dws, filters, pool):
    return tuple(StageSpec(kw, dw, filters, pool) for kw, dw in zip(kws, dws))


PRESETS = {
    "timit39": Preset(
        name="timit39",
        framing=FramingConfig(window_ms=100.0, hop_ms=5.0, sample_rate=16000),
        stages=_stages((10, 3, 9), (10, 1, 1), 100, 3),
        hidden_units=500,
        default_classes=39,
        reference_params=873_340,
    ),
    "timit117": Preset(
        name="timit117",
        framing=FramingConfig(window_ms=100.0, hop_ms=10.0, sample_rate=16000),
        # width-4 pooling fits the 100 ms window only on the first two stages
        stages=(
            StageSpec(10, 10, 100, 4),
            StageSpec(5, 1, 100, 4),
            StageSpec(7, 1, 100, 1),
        ),
        hidden_units=500,
        default_classes=117,
        reference_params=986_680,
    ),
    "timit183": Preset(
        name="timit183",
        framing=FramingConfig(window_ms=150.0, hop_ms=7.5, sample_rate=16000),
        stages=_stages((10, 7, 7), (10, 1, 1), 100, 2),
        hidden_units=500,
        default_classes=183,
        reference_params=803_363,
    ),
    "wsj": Preset(
        name="wsj",
        framing=FramingConfig(window_ms=680.0, hop_ms=10.0, sample_rate=16000),
        stages=_stages((10, 7, 9), (10, 1, 1), 100, 2),
        hidden_units=1000,
        default_classes=40,
        reference_params=6_573_440,
    ),
    "tiny": Preset(
        name="tiny",
        framing=FramingConfig(window_ms=100.0, hop_ms=5.0, sample_rate=8000),
        stages=(StageSpec(10, 10, 16, 2), StageSpec(5, 1, 16, 2)),
        hidden_units=64,
        default_classes=5,
    ),
}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None


def network_config(preset, num_classes=None):
    return NetworkConfig(
        stages=preset.stages,
        hidden_units=preset.hidden_units,
        num_classes=num_classes or preset.default_classes,
        window_samples=preset.framing.window_samples,
    )


def param_count(config):
    """Total learned parameters: network plus K^2 + K transition scores."""
    n = sum(int(np.prod(shape)) for _, shape in parameter_shapes(config))
    k = config.num_classes
    return n + k * k + k


def describe(preset, num_classes=None):
    """Multi-line summary of the resolved architecture and its size."""
    config = network_config(preset, num_classes)
    f = preset.framing
    lines = [
        f"preset {preset.name}: {f.sample_rate} Hz, window {f.window_ms:g} ms "
        f"({f.window_samples} samples), hop {f.hop_ms:g} ms ({f.hop_samples} samples)"
    ]
    for i, s in enumerate(config.stages, start=1):
        lines.append(
            f"  stage {i}: conv kw={s.conv_kw} dw={s.conv_dw} filters={s.filters}, "
            f"pool {s.pool_kw}"
        )
    t_out, d_out = stage_output_shape(config)
    lines.append(
        f"  classifier: {t_out} x {d_out} -> {config.hidden_units} -> "
        f"{config.num_classes} classes"
    )
    lines.append(f"  receptive field: {receptive_field(config)} samples")
    lines.append(f"  parameters: {param_count(config)}")
    if preset.reference_params is not None and (
        num_classes is None or num_classes == preset.default_classes
    ):
        lines.append(
            f"  reference count for the original {preset.default_classes}-class "
            f"configuration: {preset.reference_params} (reported, not asserted; "
            f"see README)"
        )
    return "\n".join(lines)
