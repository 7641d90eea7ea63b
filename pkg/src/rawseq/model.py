"""The trainable artifact: scoring network, transition scores, framing, and
label alphabet behind one flat parameter vector, serializable to a single
binary file.

File layout (all integers little-endian): the magic string ``RSQM1``
followed by length-prefixed fields, each a uint64 byte count and payload.
Integer fields are 8-byte uint64 payloads, label names are UTF-8 payloads,
and the final field is the flat float64 parameter vector. Field order:
format version, sample rate, hop samples, window samples, input dim, stage
count, one 40-byte (kw, dw, filters, pool_kw, pool_dw) record per stage,
hidden units, class count, one name per class, theta.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import network as net
from .crf import CrfParams
from .data import FramingConfig, LabelAlphabet, frame_signal, normalize_samples
from .errors import ConfigError, DatasetError, ModelFormatError
from .network import Network, NetworkConfig, ParameterStore, StageSpec

MODEL_MAGIC = b"RSQM1"
FORMAT_VERSION = 1


@dataclass
class SequenceModel:
    config: NetworkConfig
    framing: FramingConfig
    labels: LabelAlphabet
    store: ParameterStore
    network: Network
    crf: CrfParams

    @property
    def param_count(self):
        return self.store.size

    def frame_utterance(self, samples, sample_rate=None):
        """Normalize a raw signal and cut it into model-sized windows."""
        if sample_rate is not None and sample_rate != self.framing.sample_rate:
            raise DatasetError(
                f"signal sampled at {sample_rate} Hz, model expects "
                f"{self.framing.sample_rate} Hz"
            )
        return frame_signal(normalize_samples(samples), self.framing)

    def score_sequence(self, windows):
        return self.network.score_sequence(windows)

    def save(self, path):
        write_model(self, path)

    def theta_bytes(self):
        return self.store.theta.astype("<f8").tobytes()


def build_model(config, framing, labels, seed):
    """Assemble network + transition parameters in one seeded store."""
    if framing.window_samples != config.window_samples:
        raise ConfigError(
            f"network was sized for {config.window_samples}-sample windows but "
            f"framing produces {framing.window_samples}"
        )
    if labels.size != config.num_classes:
        raise ConfigError(
            f"alphabet has {labels.size} labels, network outputs {config.num_classes}"
        )
    k = config.num_classes
    shapes = net.parameter_shapes(config) + [("crf.trans", (k, k)), ("crf.init", (k,))]
    store = ParameterStore(shapes)
    net.init_parameters(store, config, seed)  # crf slices stay zero
    return SequenceModel(
        config=config,
        framing=framing,
        labels=labels,
        store=store,
        network=Network(config, store),
        crf=CrfParams(store.view("crf.trans"), store.view("crf.init")),
    )


def _write_field(fh, payload):
    fh.write(struct.pack("<Q", len(payload)))
    fh.write(payload)


def _write_int(fh, value):
    _write_field(fh, struct.pack("<Q", value))


def write_model(model, path):
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        _write_int(fh, FORMAT_VERSION)
        _write_int(fh, model.framing.sample_rate)
        _write_int(fh, model.framing.hop_samples)
        _write_int(fh, model.config.window_samples)
        _write_int(fh, model.config.input_dim)
        _write_int(fh, len(model.config.stages))
        for s in model.config.stages:
            _write_field(
                fh,
                struct.pack("<5Q", s.conv_kw, s.conv_dw, s.filters, s.pool_kw, s.pool_dw),
            )
        _write_int(fh, model.config.hidden_units)
        _write_int(fh, model.config.num_classes)
        for name in model.labels.names:
            _write_field(fh, name.encode("utf-8"))
        _write_field(fh, model.theta_bytes())


class _Reader:
    def __init__(self, fh, path):
        self.fh = fh
        self.path = path

    def field(self):
        head = self.fh.read(8)
        if len(head) != 8:
            raise ModelFormatError(f"{self.path}: truncated model file")
        (n,) = struct.unpack("<Q", head)
        payload = self.fh.read(n)
        if len(payload) != n:
            raise ModelFormatError(f"{self.path}: truncated model file")
        return payload

    def integer(self):
        payload = self.field()
        if len(payload) != 8:
            raise ModelFormatError(f"{self.path}: malformed integer field")
        return struct.unpack("<Q", payload)[0]


def load_model(path):
    path = Path(path)
    if not path.is_file():
        raise ModelFormatError(f"model file {path} does not exist")
    with open(path, "rb") as fh:
        if fh.read(5) != MODEL_MAGIC:
            raise ModelFormatError(f"{path}: not a model file (bad magic)")
        r = _Reader(fh, path)
        version = r.integer()
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"{path}: unsupported format version {version}")
        sample_rate = r.integer()
        hop_samples = r.integer()
        window_samples = r.integer()
        input_dim = r.integer()
        stages = []
        for _ in range(r.integer()):
            payload = r.field()
            if len(payload) != 40:
                raise ModelFormatError(f"{path}: malformed stage record")
            kw, dw, filters, pkw, pdw = struct.unpack("<5Q", payload)
            stages.append(StageSpec(kw, dw, filters, pkw, pdw))
        hidden = r.integer()
        k = r.integer()
        names = tuple(r.field().decode("utf-8") for _ in range(k))
        theta = np.frombuffer(r.field(), dtype="<f8")

    config = NetworkConfig(
        stages=tuple(stages),
        hidden_units=hidden,
        num_classes=k,
        window_samples=window_samples,
        input_dim=input_dim,
    )
    framing = FramingConfig(
        window_ms=window_samples * 1000.0 / sample_rate,
        hop_ms=hop_samples * 1000.0 / sample_rate,
        sample_rate=sample_rate,
    )
    model = build_model(config, framing, LabelAlphabet(names), seed=0)
    if theta.shape[0] != model.store.size:
        raise ModelFormatError(
            f"{path}: parameter vector has {theta.shape[0]} entries, "
            f"config implies {model.store.size}"
        )
    model.store.theta[:] = theta
    return model
