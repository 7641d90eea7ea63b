"""NumPy implementations of the hot inner loops.

This backend is selected when the compiled extension is unavailable, and it
doubles as the reference the extension is checked against. All functions
assume validated, C-contiguous float64 inputs; validation lives in the
package-level wrappers.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

NAME = "python"


def _window_cols(x, kw, dw):
    # (t_out, kw*d_in) matrix of flattened windows, frame-major.
    t_in, d_in = x.shape
    t_out = (t_in - kw) // dw + 1
    wins = sliding_window_view(x, (kw, d_in))[::dw, 0]
    return wins.reshape(t_out, kw * d_in)


def conv1d_forward(x, weights, bias, kw, dw):
    cols = _window_cols(x, kw, dw)
    return cols @ weights.T + bias


def conv1d_backward(x, weights, kw, dw, grad_out):
    t_out = grad_out.shape[0]
    cols = _window_cols(x, kw, dw)
    grad_w = grad_out.T @ cols
    grad_b = grad_out.sum(axis=0)
    grad_cols = (grad_out @ weights).reshape(t_out, kw, x.shape[1])
    grad_x = np.zeros_like(x)
    starts = np.arange(t_out) * dw
    for j in range(kw):
        # starts+j are distinct for fixed j, so fancy += accumulates safely
        grad_x[starts + j] += grad_cols[:, j, :]
    return grad_x, grad_w, grad_b


def maxpool_forward(x, kw, dw):
    t_in, d = x.shape
    t_out = (t_in - kw) // dw + 1
    wins = sliding_window_view(x, (kw, d))[::dw, 0]
    local = wins.argmax(axis=1)  # argmax picks the lowest index on ties
    y = np.take_along_axis(wins, local[:, None, :], axis=1)[:, 0, :]
    argmax = local + (np.arange(t_out) * dw)[:, None]
    return np.ascontiguousarray(y), np.ascontiguousarray(argmax)


def maxpool_backward(argmax, grad_out, t_in):
    t_out, d = grad_out.shape
    grad_x = np.zeros((t_in, d))
    cols = np.tile(np.arange(d), t_out)
    np.add.at(grad_x, (argmax.ravel(), cols), grad_out.ravel())
    return grad_x


def _logsumexp_rows(m):
    mx = m.max(axis=1)
    return mx + np.log(np.exp(m - mx[:, None]).sum(axis=1))


def crf_alpha(scores, trans, init):
    t_len, k = scores.shape
    alpha = np.empty((t_len, k))
    alpha[0] = init + scores[0]
    for t in range(1, t_len):
        alpha[t] = scores[t] + _logsumexp_rows(alpha[t - 1] + trans)
    return alpha


def crf_beta(scores, trans):
    t_len, k = scores.shape
    beta = np.zeros((t_len, k))
    for t in range(t_len - 2, -1, -1):
        # beta[t, j] = logadd_i(trans[i, j] + scores[t+1, i] + beta[t+1, i])
        m = trans + (scores[t + 1] + beta[t + 1])[:, None]
        mx = m.max(axis=0)
        beta[t] = mx + np.log(np.exp(m - mx[None, :]).sum(axis=0))
    return beta


def viterbi(scores, trans, init):
    t_len, k = scores.shape
    back = np.zeros((t_len, k), dtype=np.int64)
    delta = init + scores[0]
    for t in range(1, t_len):
        cand = delta[None, :] + trans
        back[t] = cand.argmax(axis=1)
        delta = scores[t] + cand[np.arange(k), back[t]]
    path = np.empty(t_len, dtype=np.int64)
    path[-1] = int(delta.argmax())
    for t in range(t_len - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, float(delta[path[-1]])
