"""Raw-signal datasets: framing, synthetic corpus generation, on-disk
formats, label post-processing, and the edit-distance metric.

On-disk layout: a manifest text file with one ``<id> <signal-file>
<label-file>`` line per utterance (paths relative to the manifest), signal
files holding little-endian float32 samples behind an 8-byte header (magic
``RSQS`` + uint32 sample rate), and label files holding whitespace-separated
label names, one per framing hop.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DatasetError, InputTooShortError

SIGNAL_MAGIC = b"RSQS"


def _samples_for(ms, sample_rate, what):
    exact = ms * sample_rate / 1000.0
    n = round(exact)
    if abs(exact - n) > 1e-9 or n < 1:
        raise ConfigError(
            f"{what} of {ms} ms is not a whole positive number of samples at "
            f"{sample_rate} Hz"
        )
    return int(n)


@dataclass(frozen=True)
class FramingConfig:
    """How a raw signal is cut into classification frames.

    Each labeled hop of ``hop_ms`` gets one window of ``window_ms`` context
    centered on it, so ``window_ms >= hop_ms``.
    """

    window_ms: float
    hop_ms: float
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError(f"sample rate must be positive, got {self.sample_rate}")
        if not self.window_ms >= self.hop_ms > 0:
            raise ConfigError(
                f"need window_ms >= hop_ms > 0, got window={self.window_ms}, "
                f"hop={self.hop_ms}"
            )
        self.window_samples
        self.hop_samples

    @property
    def window_samples(self):
        return _samples_for(self.window_ms, self.sample_rate, "window")

    @property
    def hop_samples(self):
        return _samples_for(self.hop_ms, self.sample_rate, "hop")

    def num_frames(self, num_samples):
        """Framing hops that fit in a signal; equals the required label count."""
        return int(num_samples) // self.hop_samples


@dataclass(frozen=True)
class LabelAlphabet:
    """Ordered, unique label names; index == class id everywhere."""

    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) < 2:
            raise ConfigError(f"an alphabet needs at least 2 labels, got {len(self.names)}")
        if len(set(self.names)) != len(self.names):
            raise ConfigError("alphabet names must be unique")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    @property
    def size(self):
        return len(self.names)

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise DatasetError(f"label {name!r} is not in the alphabet") from None

    def __contains__(self, name):
        return name in self._index


@dataclass
class RawUtterance:
    """One sampled signal plus its per-hop label indices."""

    id: str
    samples: np.ndarray  # float32
    sample_rate: int
    labels: np.ndarray  # int64 indices into the dataset alphabet


@dataclass
class Dataset:
    utterances: list
    alphabet: LabelAlphabet | None

    def __len__(self):
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)


def normalize_samples(samples):
    """Per-utterance zero-mean, unit-variance copy in float64.

    A constant signal normalizes to all zeros rather than dividing by ~0.
    """
    x = np.asarray(samples, dtype=np.float64)
    x = x - x.mean()
    std = x.std()
    if std < 1e-12:
        return np.zeros_like(x)
    return x / std


def frame_signal(samples, framing):
    """Cut a signal into one window per labeled hop.

    Window t is ``window_samples`` wide, centered on hop t; utterance edges
    are reflection-padded so every labeled hop gets a full window. Returns
    an (n_frames, window_samples) array. With ``window_ms == hop_ms`` the
    windows tile the signal exactly.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise DatasetError(f"expected a 1-D signal, got shape {x.shape}")
    win = framing.window_samples
    hop = framing.hop_samples
    if x.shape[0] < win:
        raise InputTooShortError(
            f"signal has {x.shape[0]} samples; one window needs at least {win}"
        )
    n = framing.num_frames(x.shape[0])
    centers = np.arange(n) * hop + hop // 2
    starts = centers - win // 2
    pad_left = max(0, -int(starts[0]))
    pad_right = max(0, int(starts[-1]) + win - x.shape[0])
    padded = np.pad(x, (pad_left, pad_right), mode="reflect")
    out = np.empty((n, win))
    for t in range(n):
        s = int(starts[t]) + pad_left
        out[t] = padded[s : s + win]
    return out


# ---------------------------------------------------------------------------
# synthetic corpus


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs for the synthetic raw-signal corpus.

    Class k is a sinusoid at ``base_freq * (k + 1)`` Hz with random phase,
    plus white noise at ``snr_db``. Utterances concatenate a few
    random-length segments; labels follow segment boundaries at hop
    resolution.
    """

    sample_rate: int = 8000
    hop_ms: float = 5.0
    snr_db: float = 20.0
    min_segment_ms: float = 30.0
    max_segment_ms: float = 200.0
    min_segments: int = 3
    max_segments: int = 8
    base_freq: float = 300.0

    def __post_init__(self):
        if not 0 < self.min_segment_ms <= self.max_segment_ms:
            raise ConfigError("segment duration range is empty")
        if not 1 <= self.min_segments <= self.max_segments:
            raise ConfigError("segment count range is empty")
        if self.base_freq * 2 >= self.sample_rate:
            raise ConfigError(
                f"base frequency {self.base_freq} Hz does not leave room for "
                f"class tones below Nyquist at {self.sample_rate} Hz"
            )


def class_names(num_classes):
    width = max(2, len(str(num_classes - 1)))
    return tuple(f"p{k:0{width}d}" for k in range(num_classes))


def synth_generate(num_classes, num_utterances, config=None, seed=0):
    """Deterministic synthetic dataset of labeled sinusoid segments."""
    if num_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {num_classes}")
    if num_utterances < 0:
        raise ConfigError("utterance count must be >= 0")
    cfg = config or SynthConfig()
    if cfg.base_freq * num_classes * 2 > cfg.sample_rate:
        raise ConfigError(
            f"class {num_classes - 1} tone at {cfg.base_freq * num_classes:.0f} Hz "
            f"is not below Nyquist for {cfg.sample_rate} Hz"
        )
    rng = np.random.default_rng(seed)
    hop = _samples_for(cfg.hop_ms, cfg.sample_rate, "hop")
    noise_std = 0.0
    if np.isfinite(cfg.snr_db):
        noise_std = float(np.sqrt(0.5 * 10.0 ** (-cfg.snr_db / 10.0)))

    utterances = []
    for u in range(num_utterances):
        n_seg = int(rng.integers(cfg.min_segments, cfg.max_segments + 1))
        pieces = []
        seg_classes = []
        bounds = [0]
        for _ in range(n_seg):
            k = int(rng.integers(num_classes))
            dur_ms = float(rng.uniform(cfg.min_segment_ms, cfg.max_segment_ms))
            n = max(1, round(dur_ms * cfg.sample_rate / 1000.0))
            phase = float(rng.uniform(0.0, 2.0 * np.pi))
            t = np.arange(n) / cfg.sample_rate
            pieces.append(np.sin(2.0 * np.pi * cfg.base_freq * (k + 1) * t + phase))
            seg_classes.append(k)
            bounds.append(bounds[-1] + n)
        signal = np.concatenate(pieces)
        if noise_std > 0.0:
            signal = signal + rng.normal(0.0, noise_std, signal.shape[0])
        n_frames = signal.shape[0] // hop
        signal = signal[: n_frames * hop]
        centers = np.arange(n_frames) * hop + hop // 2
        owner = np.searchsorted(np.asarray(bounds[1:]), centers, side="right")
        labels = np.asarray(seg_classes, dtype=np.int64)[owner]
        utterances.append(
            RawUtterance(
                id=f"u{u:04d}",
                samples=signal.astype(np.float32),
                sample_rate=cfg.sample_rate,
                labels=labels,
            )
        )
    return Dataset(utterances, LabelAlphabet(class_names(num_classes)))


# ---------------------------------------------------------------------------
# on-disk formats


def save_signal(path, samples, sample_rate):
    data = np.asarray(samples, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(SIGNAL_MAGIC)
        fh.write(struct.pack("<I", sample_rate))
        fh.write(data)


def load_signal(path):
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) < 8 or header[:4] != SIGNAL_MAGIC:
            raise DatasetError(f"{path}: not a signal file (bad magic)")
        (rate,) = struct.unpack("<I", header[4:8])
        samples = np.frombuffer(fh.read(), dtype="<f4")
    if samples.size == 0:
        raise DatasetError(f"{path}: signal file holds no samples")
    return samples, int(rate)


def save_dataset(dataset, out_dir):
    """Write manifest + signal/label files under ``out_dir``; returns the
    manifest path. Output bytes depend only on the dataset contents."""
    out = Path(out_dir)
    (out / "signals").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    lines = []
    for utt in dataset:
        sig_rel = f"signals/{utt.id}.rsqs"
        lab_rel = f"labels/{utt.id}.txt"
        save_signal(out / sig_rel, utt.samples, utt.sample_rate)
        names = [dataset.alphabet.names[i] for i in utt.labels]
        (out / lab_rel).write_text(" ".join(names) + "\n")
        lines.append(f"{utt.id} {sig_rel} {lab_rel}")
    manifest = out / "manifest.txt"
    manifest.write_text("\n".join(lines) + ("\n" if lines else ""))
    return manifest


def load_dataset(manifest_path, framing):
    """Load a manifest; validates each utterance's label count against the
    framing hop and builds the alphabet from the sorted union of names."""
    manifest = Path(manifest_path)
    if not manifest.is_file():
        raise DatasetError(f"manifest {manifest} does not exist")
    base = manifest.parent
    entries = []
    for lineno, line in enumerate(manifest.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DatasetError(
                f"{manifest}:{lineno}: expected '<id> <signal> <labels>', got {line!r}"
            )
        entries.append(parts)

    raw = []
    names_seen = set()
    for utt_id, sig_rel, lab_rel in entries:
        sig_path = base / sig_rel
        lab_path = base / lab_rel
        if not sig_path.is_file():
            raise DatasetError(f"utterance {utt_id!r}: missing signal file {sig_path}")
        if not lab_path.is_file():
            raise DatasetError(f"utterance {utt_id!r}: missing label file {lab_path}")
        try:
            samples, rate = load_signal(sig_path)
        except DatasetError as exc:
            raise DatasetError(f"utterance {utt_id!r}: {exc}") from None
        if rate != framing.sample_rate:
            raise DatasetError(
                f"utterance {utt_id!r}: sampled at {rate} Hz, framing expects "
                f"{framing.sample_rate} Hz"
            )
        names = lab_path.read_text().split()
        expected = framing.num_frames(samples.shape[0])
        if len(names) != expected:
            raise DatasetError(
                f"utterance {utt_id!r}: expected {expected} labels for "
                f"{samples.shape[0]} samples at hop {framing.hop_samples}, "
                f"got {len(names)}"
            )
        names_seen.update(names)
        raw.append((utt_id, samples, rate, names))

    if not raw:
        return Dataset([], None)
    alphabet = LabelAlphabet(tuple(sorted(names_seen)))
    utterances = [
        RawUtterance(
            id=utt_id,
            samples=samples,
            sample_rate=rate,
            labels=np.asarray([alphabet.index(n) for n in names], dtype=np.int64),
        )
        for utt_id, samples, rate, names in raw
    ]
    return Dataset(utterances, alphabet)


# ---------------------------------------------------------------------------
# label-sequence post-processing and the evaluation metric


def collapse_repeats(path):
    """Merge consecutive duplicate labels; idempotent."""
    seq = list(path)
    if not seq:
        raise ValueError("cannot collapse an empty label sequence")
    out = [seq[0]]
    for x in seq[1:]:
        if x != out[-1]:
            out.append(x)
    return out


def map_labels(path, mapping):
    """Relabel a path through ``mapping``; the mapping must cover every
    label present (missing ones are listed in the error)."""
    seq = list(path)
    missing = sorted({x for x in seq if x not in mapping})
    if missing:
        raise ValueError(f"mapping is missing labels: {missing}")
    return [mapping[x] for x in seq]


@dataclass(frozen=True)
class EditCounts:
    """Substitution/deletion/insertion counts of a minimal edit script."""

    sub: int
    delete: int
    insert: int
    ref_len: int

    @property
    def distance(self):
        return self.sub + self.delete + self.insert

    @property
    def accuracy(self):
        """1 - (S+D+I)/ref_len; may be negative when insertions pile up."""
        return 1.0 - self.distance / self.ref_len

    def __add__(self, other):
        return EditCounts(
            self.sub + other.sub,
            self.delete + other.delete,
            self.insert + other.insert,
            self.ref_len + other.ref_len,
        )


def edit_distance(ref, hyp):
    """Minimal-edit alignment of ``hyp`` against the reference.

    Unit-cost dynamic programming; on cost ties the backtrace prefers
    match/substitution, then deletion, then insertion, so the S/D/I split
    is deterministic (the total is the Levenshtein distance regardless).
    """
    ref = list(ref)
    hyp = list(hyp)
    if not ref:
        raise ValueError("reference sequence must be non-empty")
    n, m = len(ref), len(hyp)
    dist = np.empty((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            same = ref[i - 1] == hyp[j - 1]
            dist[i, j] = min(
                dist[i - 1, j - 1] + (0 if same else 1),
                dist[i - 1, j] + 1,
                dist[i, j - 1] + 1,
            )
    sub = delete = insert = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1):
            if ref[i - 1] != hyp[j - 1]:
                sub += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            delete += 1
            i -= 1
        else:
            insert += 1
            j -= 1
    return EditCounts(sub, delete, insert, n)
