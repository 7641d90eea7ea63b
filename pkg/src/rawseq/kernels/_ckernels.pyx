# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: 1D convolution, temporal max-pooling, and the
chain recursions (forward log-sum, backward log-sum, best path).

Mirrors the function surface of `_pykernels`; inputs are validated and made
C-contiguous by the package-level wrappers before reaching this module.
"""

import numpy as np

from libc.math cimport exp, log, INFINITY

NAME = "compiled"


def conv1d_forward(double[:, ::1] x, double[:, ::1] weights, double[::1] bias,
                   Py_ssize_t kw, Py_ssize_t dw):
    cdef Py_ssize_t t_in = x.shape[0]
    cdef Py_ssize_t d_in = x.shape[1]
    cdef Py_ssize_t d_out = weights.shape[0]
    cdef Py_ssize_t t_out = (t_in - kw) // dw + 1
    y_arr = np.empty((t_out, d_out))
    cdef double[:, ::1] y = y_arr
    cdef Py_ssize_t u, f, j, c, base
    cdef double acc
    for u in range(t_out):
        base = u * dw
        for f in range(d_out):
            acc = bias[f]
            for j in range(kw):
                for c in range(d_in):
                    acc += weights[f, j * d_in + c] * x[base + j, c]
            y[u, f] = acc
    return y_arr


def conv1d_backward(double[:, ::1] x, double[:, ::1] weights,
                    Py_ssize_t kw, Py_ssize_t dw, double[:, ::1] grad_out):
    cdef Py_ssize_t t_in = x.shape[0]
    cdef Py_ssize_t d_in = x.shape[1]
    cdef Py_ssize_t d_out = weights.shape[0]
    cdef Py_ssize_t t_out = grad_out.shape[0]
    gx_arr = np.zeros((t_in, d_in))
    gw_arr = np.zeros((d_out, kw * d_in))
    gb_arr = np.zeros(d_out)
    cdef double[:, ::1] gx = gx_arr
    cdef double[:, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr
    cdef Py_ssize_t u, f, j, c, base
    cdef double g
    for u in range(t_out):
        base = u * dw
        for f in range(d_out):
            g = grad_out[u, f]
            gb[f] += g
            for j in range(kw):
                for c in range(d_in):
                    gw[f, j * d_in + c] += g * x[base + j, c]
                    gx[base + j, c] += g * weights[f, j * d_in + c]
    return gx_arr, gw_arr, gb_arr


def maxpool_forward(double[:, ::1] x, Py_ssize_t kw, Py_ssize_t dw):
    cdef Py_ssize_t t_in = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t t_out = (t_in - kw) // dw + 1
    y_arr = np.empty((t_out, d))
    arg_arr = np.empty((t_out, d), dtype=np.int64)
    cdef double[:, ::1] y = y_arr
    cdef long long[:, ::1] arg = arg_arr
    cdef Py_ssize_t u, i, j, base, best_j
    cdef double best, v
    for u in range(t_out):
        base = u * dw
        for i in range(d):
            best = x[base, i]
            best_j = base
            for j in range(1, kw):
                v = x[base + j, i]
                if v > best:  # strict: lowest index wins ties
                    best = v
                    best_j = base + j
            y[u, i] = best
            arg[u, i] = best_j
    return y_arr, arg_arr


def maxpool_backward(long long[:, ::1] argmax, double[:, ::1] grad_out,
                     Py_ssize_t t_in):
    cdef Py_ssize_t t_out = grad_out.shape[0]
    cdef Py_ssize_t d = grad_out.shape[1]
    gx_arr = np.zeros((t_in, d))
    cdef double[:, ::1] gx = gx_arr
    cdef Py_ssize_t u, i
    for u in range(t_out):
        for i in range(d):
            gx[argmax[u, i], i] += grad_out[u, i]
    return gx_arr


def crf_alpha(double[:, ::1] scores, double[:, ::1] trans, double[::1] init):
    cdef Py_ssize_t t_len = scores.shape[0]
    cdef Py_ssize_t k = scores.shape[1]
    alpha_arr = np.empty((t_len, k))
    cdef double[:, ::1] alpha = alpha_arr
    cdef Py_ssize_t t, i, j
    cdef double m, s, v
    for i in range(k):
        alpha[0, i] = init[i] + scores[0, i]
    for t in range(1, t_len):
        for i in range(k):
            m = -INFINITY
            for j in range(k):
                v = alpha[t - 1, j] + trans[i, j]
                if v > m:
                    m = v
            s = 0.0
            for j in range(k):
                s += exp(alpha[t - 1, j] + trans[i, j] - m)
            alpha[t, i] = scores[t, i] + m + log(s)
    return alpha_arr


def crf_beta(double[:, ::1] scores, double[:, ::1] trans):
    cdef Py_ssize_t t_len = scores.shape[0]
    cdef Py_ssize_t k = scores.shape[1]
    beta_arr = np.zeros((t_len, k))
    cdef double[:, ::1] beta = beta_arr
    cdef Py_ssize_t t, i, j
    cdef double m, s, v
    for t in range(t_len - 2, -1, -1):
        for j in range(k):
            m = -INFINITY
            for i in range(k):
                v = trans[i, j] + scores[t + 1, i] + beta[t + 1, i]
                if v > m:
                    m = v
            s = 0.0
            for i in range(k):
                s += exp(trans[i, j] + scores[t + 1, i] + beta[t + 1, i] - m)
            beta[t, j] = m + log(s)
    return beta_arr


def viterbi(double[:, ::1] scores, double[:, ::1] trans, double[::1] init):
    cdef Py_ssize_t t_len = scores.shape[0]
    cdef Py_ssize_t k = scores.shape[1]
    back_arr = np.zeros((t_len, k), dtype=np.int64)
    path_arr = np.empty(t_len, dtype=np.int64)
    delta_arr = np.empty(k)
    prev_arr = np.empty(k)
    cdef long long[:, ::1] back = back_arr
    cdef long long[::1] path = path_arr
    cdef double[::1] delta = delta_arr
    cdef double[::1] prev = prev_arr
    cdef Py_ssize_t t, i, j, best_j
    cdef double best, v
    for i in range(k):
        delta[i] = init[i] + scores[0, i]
    for t in range(1, t_len):
        for i in range(k):
            prev[i] = delta[i]
        for i in range(k):
            best = -INFINITY
            best_j = 0
            for j in range(k):
                v = prev[j] + trans[i, j]
                if v > best:  # strict: lowest predecessor wins ties
                    best = v
                    best_j = j
            back[t, i] = best_j
            delta[i] = scores[t, i] + best
    best = -INFINITY
    best_j = 0
    for i in range(k):
        if delta[i] > best:
            best = delta[i]
            best_j = i
    path[t_len - 1] = best_j
    for t in range(t_len - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path_arr, float(best)
