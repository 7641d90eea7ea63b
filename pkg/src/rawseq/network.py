"""Frame-scoring network: stacked conv/pool/tanh stages plus a two-layer
classifier, with hand-derived backpropagation into one flat parameter array.

Every forward pass over a window returns the tape of intermediates the
backward pass needs, so forward/backward stay pure with respect to hidden
state and distinct windows can be processed independently.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError, InputTooShortError


@dataclass(frozen=True)
class StageSpec:
    """One filter-extraction stage: convolution then temporal max-pooling.

    ``pool_dw`` defaults to ``pool_kw`` (non-overlapping pooling).
    """

    conv_kw: int
    conv_dw: int
    filters: int
    pool_kw: int
    pool_dw: int | None = None

    def __post_init__(self):
        if self.pool_dw is None:
            object.__setattr__(self, "pool_dw", self.pool_kw)
        for name in ("conv_kw", "conv_dw", "filters", "pool_kw", "pool_dw"):
            if getattr(self, name) < 1:
                raise ConfigError(f"stage field {name} must be >= 1, got {getattr(self, name)}")


@dataclass(frozen=True)
class NetworkConfig:
    stages: tuple
    hidden_units: int
    num_classes: int
    window_samples: int
    input_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ConfigError("at least one conv/pool stage is required")
        if self.num_classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.num_classes}")
        if self.hidden_units < 1:
            raise ConfigError("hidden_units must be >= 1")
        if self.input_dim < 1:
            raise ConfigError("input_dim must be >= 1")
        if self.window_samples % self.input_dim:
            raise ConfigError(
                f"window of {self.window_samples} samples is not a whole number "
                f"of {self.input_dim}-sample frames"
            )
        rf = receptive_field(self)
        if rf > self.window_samples:
            raise ConfigError(
                f"receptive field needs {rf} samples but the framing window "
                f"has only {self.window_samples}"
            )


def receptive_field(config):
    """Input samples needed to produce a single frame after all stages.

    Composes the shape law ``out = floor((in - kw)/dw) + 1`` backwards,
    taking the minimal input length at every stage.
    """
    frames = 1
    for stage in reversed(config.stages):
        frames = (frames - 1) * stage.pool_dw + stage.pool_kw
        frames = (frames - 1) * stage.conv_dw + stage.conv_kw
    return frames * config.input_dim


def stage_output_shape(config):
    """(frames, dims) entering the classifier for a full-size window."""
    t = config.window_samples // config.input_dim
    d = config.input_dim
    for stage in config.stages:
        t = kernels.output_length(t, stage.conv_kw, stage.conv_dw)
        t = kernels.output_length(t, stage.pool_kw, stage.pool_dw)
        d = stage.filters
    return t, d


def parameter_shapes(config):
    """Ordered (name, shape) pairs for every learned array in the network."""
    shapes = []
    d = config.input_dim
    for i, stage in enumerate(config.stages):
        shapes.append((f"stage{i}.w", (stage.filters, stage.conv_kw * d)))
        shapes.append((f"stage{i}.b", (stage.filters,)))
        d = stage.filters
    t_out, d_out = stage_output_shape(config)
    flat = t_out * d_out
    shapes.append(("class1.w", (config.hidden_units, flat)))
    shapes.append(("class1.b", (config.hidden_units,)))
    shapes.append(("class2.w", (config.num_classes, config.hidden_units)))
    shapes.append(("class2.b", (config.num_classes,)))
    return shapes


class ParameterStore:
    """Flat float64 parameter vector plus a matching flat gradient vector.

    Named views alias contiguous slices of both arrays, so mutating a view
    mutates the flat array and vice versa.
    """

    def __init__(self, shapes):
        sizes = [int(np.prod(shape)) for _, shape in shapes]
        total = int(sum(sizes))
        self.theta = np.zeros(total)
        self.grad = np.zeros(total)
        self._views = {}
        self._grad_views = {}
        offset = 0
        for (name, shape), size in zip(shapes, sizes):
            self._views[name] = self.theta[offset : offset + size].reshape(shape)
            self._grad_views[name] = self.grad[offset : offset + size].reshape(shape)
            offset += size

    @property
    def size(self):
        return self.theta.size

    def names(self):
        return tuple(self._views)

    def view(self, name):
        return self._views[name]

    def grad_view(self, name):
        return self._grad_views[name]

    def zero_grad(self):
        self.grad[:] = 0.0

    def coordinate_name(self, index):
        """Human-readable name of one flat coordinate, for diagnostics."""
        offset = 0
        for name, view in self._views.items():
            if index < offset + view.size:
                local = np.unravel_index(index - offset, view.shape)
                return f"{name}{[int(i) for i in local]}"
            offset += view.size
        raise IndexError(index)


def init_parameters(store, config, seed):
    """Uniform fan-in init: each layer's weights and bias drawn from
    [-1/sqrt(fan_in), +1/sqrt(fan_in)]. Deterministic per (config, seed);
    any non-network slices in the store (e.g. transition scores) are left
    at zero and consume no draws.
    """
    rng = np.random.default_rng(seed)
    d = config.input_dim
    for i, stage in enumerate(config.stages):
        lim = 1.0 / np.sqrt(stage.conv_kw * d)
        store.view(f"stage{i}.w")[:] = rng.uniform(-lim, lim, store.view(f"stage{i}.w").shape)
        store.view(f"stage{i}.b")[:] = rng.uniform(-lim, lim, store.view(f"stage{i}.b").shape)
        d = stage.filters
    for layer in ("class1", "class2"):
        w = store.view(f"{layer}.w")
        lim = 1.0 / np.sqrt(w.shape[1])
        w[:] = rng.uniform(-lim, lim, w.shape)
        store.view(f"{layer}.b")[:] = rng.uniform(-lim, lim, store.view(f"{layer}.b").shape)


@dataclass
class StageTape:
    x_in: np.ndarray
    conv_frames: int
    argmax: np.ndarray
    tanh_out: np.ndarray


@dataclass
class ForwardTape:
    stages: list = field(default_factory=list)
    flat: np.ndarray | None = None
    hidden: np.ndarray | None = None


class Network:
    """Binds a config to parameter views and runs forward/backward passes."""

    def __init__(self, config, store):
        self.config = config
        self.store = store
        self._final_shape = stage_output_shape(config)

    @property
    def param_count(self):
        return self.store.size

    def _window_frames(self, window):
        a = np.ascontiguousarray(window, dtype=np.float64)
        if a.ndim == 2 and a.shape[1] == self.config.input_dim:
            a = a.reshape(-1)
        if a.ndim != 1:
            raise DimensionError(f"window must be 1-D samples, got shape {np.shape(window)}")
        need = self.config.window_samples
        if a.shape[0] < need:
            raise InputTooShortError(
                f"window has {a.shape[0]} samples; this model needs {need}"
            )
        if a.shape[0] != need:
            raise DimensionError(
                f"window has {a.shape[0]} samples; this model was built for {need}"
            )
        return a.reshape(-1, self.config.input_dim)

    def score_window(self, window):
        """Raw class scores for one window plus the backprop tape."""
        x = self._window_frames(window)
        tape = ForwardTape()
        for i, stage in enumerate(self.config.stages):
            w = self.store.view(f"stage{i}.w")
            b = self.store.view(f"stage{i}.b")
            c = kernels.conv1d_forward(x, w, b, stage.conv_kw, stage.conv_dw)
            p, argmax = kernels.maxpool_forward(c, stage.pool_kw, stage.pool_dw)
            h = kernels.tanh_forward(p)
            tape.stages.append(StageTape(x, c.shape[0], argmax, h))
            x = h
        tape.flat = np.ascontiguousarray(x).reshape(-1)
        a1 = kernels.linear_forward(tape.flat, self.store.view("class1.w"), self.store.view("class1.b"))
        tape.hidden = kernels.tanh_forward(a1)
        scores = kernels.linear_forward(tape.hidden, self.store.view("class2.w"), self.store.view("class2.b"))
        return scores, tape

    def score_sequence(self, windows):
        """Score every window; row t of the result is score_window(windows[t]).

        Windows carry no cross-window state, so rows are exactly the
        independent per-window scores.
        """
        scores = np.empty((len(windows), self.config.num_classes))
        tapes = []
        for t, window in enumerate(windows):
            scores[t], tape = self.score_window(window)
            tapes.append(tape)
        return scores, tapes

    def backward_window(self, tape, d_score):
        """Accumulate d(loss)/d(theta) for one window into the flat gradient."""
        d_score = np.asarray(d_score, dtype=np.float64)
        if d_score.shape != (self.config.num_classes,):
            raise DimensionError(
                f"d_score shape {d_score.shape} != ({self.config.num_classes},)"
            )
        d_hidden, g_w2, g_b2 = kernels.linear_backward(
            tape.hidden, self.store.view("class2.w"), d_score
        )
        self.store.grad_view("class2.w")[:] += g_w2
        self.store.grad_view("class2.b")[:] += g_b2
        d_a1 = kernels.tanh_backward(tape.hidden, d_hidden)
        d_flat, g_w1, g_b1 = kernels.linear_backward(
            tape.flat, self.store.view("class1.w"), d_a1
        )
        self.store.grad_view("class1.w")[:] += g_w1
        self.store.grad_view("class1.b")[:] += g_b1

        d = d_flat.reshape(self._final_shape)
        for i in range(len(self.config.stages) - 1, -1, -1):
            stage = self.config.stages[i]
            st = tape.stages[i]
            d_pool = kernels.tanh_backward(st.tanh_out, d)
            d_conv = kernels.maxpool_backward(st.argmax, d_pool, st.conv_frames)
            d, g_w, g_b = kernels.conv1d_backward(
                st.x_in, self.store.view(f"stage{i}.w"), stage.conv_kw, stage.conv_dw, d_conv
            )
            self.store.grad_view(f"stage{i}.w")[:] += g_w
            self.store.grad_view(f"stage{i}.b")[:] += g_b
        return d

    def backward_sequence(self, tapes, d_scores):
        """Accumulate gradients for a whole scored sequence."""
        d_scores = np.asarray(d_scores, dtype=np.float64)
        if d_scores.shape != (len(tapes), self.config.num_classes):
            raise DimensionError(
                f"d_scores shape {d_scores.shape} does not match "
                f"({len(tapes)}, {self.config.num_classes})"
            )
        for tape, row in zip(tapes, d_scores):
            self.backward_window(tape, row)
        return self.store.grad


def build(config, seed):
    """Fresh network with its own parameter store, deterministically seeded."""
    store = ParameterStore(parameter_shapes(config))
    init_parameters(store, config, seed)
    return Network(config, store)
