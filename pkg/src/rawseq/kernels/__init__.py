"""Layer primitives with a compiled fast path.

Two interchangeable backends provide the inner loops: a Cython extension
(``_ckernels``) built at install time and a NumPy fallback (``_pykernels``).
The faster one is picked at import; set ``RAWSEQ_KERNELS=python`` or
``=compiled`` to force a choice. The elementwise tanh and the dense
transform are single ufunc/BLAS calls and are shared by both backends.

All forward/backward pairs are pure functions; pooling returns its argmax
tape explicitly instead of keeping hidden state.
"""

import os

import numpy as np

from ..errors import ConfigError, DimensionError, InputTooShortError
from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def available_backends():
    """Names of the backends importable in this environment."""
    return tuple(sorted(_BACKENDS))


def get_backend(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigError(
            f"kernel backend {name!r} not available; have {available_backends()}"
        ) from None


def _default_backend():
    forced = os.environ.get("RAWSEQ_KERNELS", "").strip().lower()
    if forced:
        return get_backend(forced)
    return _BACKENDS.get("compiled", _pykernels)


_active = _default_backend()


def active_backend():
    """Name of the backend currently answering kernel calls."""
    return _active.NAME


def use_backend(name):
    """Switch the active backend; returns the previously active name."""
    global _active
    previous = _active.NAME
    _active = get_backend(name)
    return previous


def _as_frames(x, what="input"):
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"{what} must be a T x d frame sequence, got shape {np.shape(x)}")
    return a


def _as_matrix(x, what):
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{what} must be 2-D, got shape {np.shape(x)}")
    return a


def _as_vector(x, what):
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise DimensionError(f"{what} must be 1-D, got shape {np.shape(x)}")
    return a


def output_length(t_in, kw, dw):
    """Number of window applications on a length-``t_in`` sequence.

    Both convolution and pooling obey ``floor((t_in - kw) / dw) + 1`` for
    left-anchored, unpadded windows.
    """
    if kw < 1 or dw < 1:
        raise ConfigError(f"window width and shift must be >= 1, got kw={kw}, dw={dw}")
    if t_in < kw:
        raise InputTooShortError(
            f"input has {t_in} frames but the window needs at least {kw}"
        )
    return (t_in - kw) // dw + 1


def conv1d_forward(x, weights, bias, kw, dw):
    """Apply the same linear map to every kw-frame window, stepped by dw.

    ``weights`` is (d_out, kw*d_in): each row is one filter over a window
    flattened frame-major. Windows are anchored at the left edge with no
    padding, so the output has ``output_length(T, kw, dw)`` frames.
    """
    x = _as_frames(x)
    weights = _as_matrix(weights, "weights")
    bias = _as_vector(bias, "bias")
    t_in, d_in = x.shape
    if weights.shape[1] != kw * d_in:
        raise DimensionError(
            f"weights have {weights.shape[1]} columns, expected kw*d_in = {kw * d_in}"
        )
    if bias.shape[0] != weights.shape[0]:
        raise DimensionError(
            f"bias has {bias.shape[0]} entries for {weights.shape[0]} filters"
        )
    output_length(t_in, kw, dw)  # validates t_in >= kw
    return _active.conv1d_forward(x, weights, bias, kw, dw)


def conv1d_backward(x, weights, kw, dw, grad_out):
    """Exact gradients of any scalar loss through ``conv1d_forward``.

    Returns ``(grad_x, grad_weights, grad_bias)``; overlapping windows
    accumulate additively into ``grad_x``.
    """
    x = _as_frames(x)
    weights = _as_matrix(weights, "weights")
    grad_out = _as_matrix(grad_out, "grad_out")
    t_out = output_length(x.shape[0], kw, dw)
    if grad_out.shape != (t_out, weights.shape[0]):
        raise DimensionError(
            f"grad_out shape {grad_out.shape} does not match forward output "
            f"({t_out}, {weights.shape[0]})"
        )
    if weights.shape[1] != kw * x.shape[1]:
        raise DimensionError(
            f"weights have {weights.shape[1]} columns, expected kw*d_in = {kw * x.shape[1]}"
        )
    return _active.conv1d_backward(x, weights, kw, dw, grad_out)


def maxpool_forward(x, kw, dw):
    """Per-dimension temporal max over kw-frame windows stepped by dw.

    Returns ``(pooled, argmax)`` where ``argmax`` records, per output entry,
    the source frame index that won (lowest index on ties). The tape is the
    explicit state needed to route gradients back.
    """
    x = _as_frames(x)
    output_length(x.shape[0], kw, dw)
    return _active.maxpool_forward(x, kw, dw)


def maxpool_backward(argmax, grad_out, t_in):
    """Route each ``grad_out`` entry to its recorded argmax source frame."""
    grad_out = _as_matrix(grad_out, "grad_out")
    argmax = np.ascontiguousarray(argmax, dtype=np.int64)
    if argmax.shape != grad_out.shape:
        raise DimensionError(
            f"argmax shape {argmax.shape} does not match grad_out shape {grad_out.shape}"
        )
    if argmax.size and (argmax.min() < 0 or argmax.max() >= t_in):
        raise DimensionError(
            f"argmax entries must lie in [0, {t_in}), got range "
            f"[{argmax.min()}, {argmax.max()}]"
        )
    return _active.maxpool_backward(argmax, grad_out, t_in)


def tanh_forward(x):
    return np.tanh(np.asarray(x, dtype=np.float64))


def tanh_backward(y, grad_out):
    """Gradient through tanh given the forward *output* ``y``."""
    y = np.asarray(y, dtype=np.float64)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if y.shape != grad_out.shape:
        raise DimensionError(
            f"tanh output shape {y.shape} does not match grad_out shape {grad_out.shape}"
        )
    return grad_out * (1.0 - y * y)


def linear_forward(x, weights, bias):
    """Dense transform ``y = W x + b`` on a single vector."""
    x = _as_vector(x, "input")
    weights = _as_matrix(weights, "weights")
    bias = _as_vector(bias, "bias")
    if weights.shape[1] != x.shape[0] or weights.shape[0] != bias.shape[0]:
        raise DimensionError(
            f"linear shapes disagree: W {weights.shape}, x {x.shape}, b {bias.shape}"
        )
    return weights @ x + bias


def linear_backward(x, weights, grad_out):
    """Exact gradients through ``linear_forward``: ``(grad_x, grad_W, grad_b)``."""
    x = _as_vector(x, "input")
    weights = _as_matrix(weights, "weights")
    grad_out = _as_vector(grad_out, "grad_out")
    if weights.shape[0] != grad_out.shape[0] or weights.shape[1] != x.shape[0]:
        raise DimensionError(
            f"linear shapes disagree: W {weights.shape}, x {x.shape}, "
            f"grad_out {grad_out.shape}"
        )
    return weights.T @ grad_out, np.outer(grad_out, x), grad_out.copy()


def logadd(z):
    """log(sum(exp(z))) with max-subtraction so large scores cannot overflow."""
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise ValueError("logadd of an empty score vector is undefined")
    m = float(z.max())
    return m + float(np.log(np.exp(z - m).sum()))


def crf_alpha(scores, trans, init):
    """Forward log-sum recursion; row t holds the log mass of all length-t prefixes."""
    return _active.crf_alpha(scores, trans, init)


def crf_beta(scores, trans):
    """Backward log-sum recursion, symmetric to :func:`crf_alpha`."""
    return _active.crf_beta(scores, trans)


def crf_viterbi(scores, trans, init):
    """Best-path recursion; returns ``(path, score)``."""
    return _active.viterbi(scores, trans, init)
