"""Linear-chain CRF over per-frame class scores.

A label path ``i_1 .. i_T`` over a T x K score matrix ``f`` is scored as

    s(path) = init[i_1] + f[1, i_1] + sum_{t=2..T} (f[t, i_t] + A[i_t, i_{t-1}])

where ``A[i, j]`` is the learned score of moving from label j to label i and
``init`` holds the scores of starting in each label. Exact inference is
dynamic programming: the best path by Viterbi, the log-partition over all
K^T paths by a linear-time log-sum recursion, and the log-likelihood
gradients by forward-backward marginals. Everything here is a pure function
of its inputs.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, EnumerationGuardError

BRUTE_FORCE_LIMIT = 10**6


@dataclass
class CrfParams:
    """Transition matrix (K x K) plus the K initial label scores.

    ``trans[i, j]`` scores label j at t-1 followed by label i at t. Arrays
    may be views into a shared parameter store; they are used in place.
    """

    trans: np.ndarray
    init: np.ndarray

    def __post_init__(self):
        self.trans = np.asarray(self.trans, dtype=np.float64)
        self.init = np.asarray(self.init, dtype=np.float64)
        k = self.init.shape[0]
        if self.trans.shape != (k, k):
            raise DimensionError(
                f"transition matrix {self.trans.shape} is not square with "
                f"side {k} (the initial-score count)"
            )

    @property
    def num_labels(self):
        return self.init.shape[0]

    @classmethod
    def zeros(cls, k):
        return cls(np.zeros((k, k)), np.zeros(k))


def _check_scores(scores, params):
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise DimensionError(f"scores must be T x K, got shape {scores.shape}")
    if scores.shape[1] != params.num_labels:
        raise DimensionError(
            f"scores have {scores.shape[1]} labels, params have {params.num_labels}"
        )
    return scores


def _check_path(path, t_len, k):
    path = np.asarray(path, dtype=np.int64)
    if path.ndim != 1 or path.shape[0] != t_len:
        raise DimensionError(f"path length {path.shape} does not match T={t_len}")
    if path.size and (path.min() < 0 or path.max() >= k):
        raise IndexError(f"path labels must lie in [0, {k})")
    return path


logadd = kernels.logadd


def path_score(scores, params, path):
    """Score of one label path: node scores plus transition scores."""
    scores = _check_scores(scores, params)
    path = _check_path(path, scores.shape[0], params.num_labels)
    total = params.init[path[0]] + scores[0, path[0]]
    if path.shape[0] > 1:
        steps = np.arange(1, scores.shape[0])
        total += scores[steps, path[1:]].sum()
        total += params.trans[path[1:], path[:-1]].sum()
    return float(total)


def forward_logsum(scores, params):
    """log-sum of exp(path score) over all K^T paths, in O(T * K^2).

    The recursion is alpha_1(k) = init[k] + f[1, k] and
    alpha_t(k) = f[t, k] + logadd_j(alpha_{t-1}(j) + A[k, j]); the result is
    logadd_k(alpha_T(k)).
    """
    scores = _check_scores(scores, params)
    trans = np.ascontiguousarray(params.trans)
    init = np.ascontiguousarray(params.init)
    alpha = kernels.crf_alpha(scores, trans, init)
    return logadd(alpha[-1])


def log_likelihood(scores, params, gold):
    """log p(gold | scores) = path_score(gold) - forward_logsum. Always <= 0."""
    return path_score(scores, params, gold) - forward_logsum(scores, params)


@dataclass
class LikelihoodGrads:
    """Exact gradients of the path log-likelihood, plus its value."""

    log_likelihood: float
    d_scores: np.ndarray  # T x K
    d_trans: np.ndarray  # K x K
    d_init: np.ndarray  # K


def likelihood_gradients(scores, params, gold):
    """Gradients of log p(gold) w.r.t. node scores, transitions, and inits.

    Node gradient rows are indicator-minus-posterior, so each sums to zero;
    the transition gradient is observed minus expected pair counts, computed
    from forward-backward marginals.
    """
    scores = _check_scores(scores, params)
    t_len, k = scores.shape
    gold = _check_path(gold, t_len, k)
    trans = np.ascontiguousarray(params.trans)
    init = np.ascontiguousarray(params.init)

    alpha = kernels.crf_alpha(scores, trans, init)
    beta = kernels.crf_beta(scores, trans)
    log_z = logadd(alpha[-1])

    d_scores = -np.exp(alpha + beta - log_z)
    d_scores[np.arange(t_len), gold] += 1.0
    d_init = d_scores[0].copy()

    d_trans = np.zeros((k, k))
    if t_len > 1:
        # expected (j -> i) counts: sum_t exp(alpha[t-1,j] + A[i,j]
        #                                     + f[t,i] + beta[t,i] - logZ)
        nxt = scores[1:] + beta[1:]
        log_pair = alpha[:-1, None, :] + trans[None, :, :] + nxt[:, :, None] - log_z
        d_trans -= np.exp(log_pair).sum(axis=0)
        np.add.at(d_trans, (gold[1:], gold[:-1]), 1.0)

    gold_score = params.init[gold[0]] + scores[0, gold[0]]
    if t_len > 1:
        gold_score += scores[np.arange(1, t_len), gold[1:]].sum()
        gold_score += trans[gold[1:], gold[:-1]].sum()

    return LikelihoodGrads(float(gold_score - log_z), d_scores, d_trans, d_init)


def viterbi(scores, params):
    """Highest-scoring label path and its score.

    Ties are broken toward the lowest label index at every backtracking
    step, so decoding is deterministic across runs and backends.
    """
    scores = _check_scores(scores, params)
    trans = np.ascontiguousarray(params.trans)
    init = np.ascontiguousarray(params.init)
    path, score = kernels.crf_viterbi(scores, trans, init)
    return path, score


def _enumerate_paths(t_len, k):
    if k**t_len > BRUTE_FORCE_LIMIT:
        raise EnumerationGuardError(
            f"{k}^{t_len} paths exceed the enumeration guard of {BRUTE_FORCE_LIMIT}"
        )
    grids = np.meshgrid(*([np.arange(k)] * t_len), indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, t_len)


def _all_path_scores(scores, params):
    t_len = scores.shape[0]
    paths = _enumerate_paths(t_len, params.num_labels)
    totals = params.init[paths[:, 0]] + scores[0, paths[:, 0]]
    if t_len > 1:
        steps = np.arange(1, t_len)
        totals = totals + scores[steps, paths[:, 1:]].sum(axis=1)
        totals = totals + params.trans[paths[:, 1:], paths[:, :-1]].sum(axis=1)
    return paths, totals


def brute_logsum(scores, params):
    """Test oracle: log-sum over explicitly enumerated paths."""
    scores = _check_scores(scores, params)
    _, totals = _all_path_scores(scores, params)
    return logadd(totals)


def brute_best(scores, params):
    """Test oracle: best path by explicit enumeration.

    Paths are enumerated in lexicographic order and ``argmax`` keeps the
    first maximum, so all-equal ties resolve to the all-lowest-label path,
    matching the Viterbi tie rule on such instances.
    """
    scores = _check_scores(scores, params)
    paths, totals = _all_path_scores(scores, params)
    best = int(np.argmax(totals))
    return paths[best].copy(), float(totals[best])
