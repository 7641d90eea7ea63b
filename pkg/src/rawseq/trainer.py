"""Joint training by per-utterance stochastic gradient ascent on the chain
log-likelihood, with early stopping on validation accuracy, plus the
decode-and-score evaluation loop.
"""

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import crf
from .data import collapse_repeats, edit_distance, EditCounts
from .errors import DatasetError, TrainingDivergedError


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 30
    patience: int = 5
    shuffle_seed: int = 0
    checkpoint_path: str | None = None
    metrics_path: str | None = None

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


def train_step(model, utterance, learning_rate):
    """One ascent update on one utterance; returns the log-likelihood
    *before* the update. Aborts on a non-finite objective or gradient."""
    windows = model.frame_utterance(utterance.samples, utterance.sample_rate)
    scores, tapes = model.network.score_sequence(windows)
    grads = crf.likelihood_gradients(scores, model.crf, utterance.labels)
    if not np.isfinite(grads.log_likelihood):
        raise TrainingDivergedError(
            f"utterance {utterance.id!r}: non-finite log-likelihood"
        )
    model.store.zero_grad()
    model.network.backward_sequence(tapes, grads.d_scores)
    model.store.grad_view("crf.trans")[:] += grads.d_trans
    model.store.grad_view("crf.init")[:] += grads.d_init
    if not np.all(np.isfinite(model.store.grad)):
        raise TrainingDivergedError(f"utterance {utterance.id!r}: non-finite gradient")
    model.store.theta += learning_rate * model.store.grad
    return grads.log_likelihood


@dataclass
class EpochMetrics:
    epoch: int
    mean_nll: float
    valid_accuracy: float

    def line(self):
        return f"{self.epoch}\t{self.mean_nll:.10f}\t{self.valid_accuracy:.10f}"


@dataclass
class TrainResult:
    best_accuracy: float
    best_epoch: int
    epochs_run: int
    history: list = field(default_factory=list)


def train(model, train_set, valid_set, config, log=None):
    """Epoch loop: seeded shuffle, one update per utterance, validation
    accuracy after each epoch, best-checkpoint keeping, patience stop.

    The returned model state is the best checkpoint, not the last epoch.
    One tab-separated ``epoch  meanNLL  validAcc`` line per epoch goes to
    ``config.metrics_path`` (if set) and to ``log`` (if given).
    """
    if not len(train_set) or not len(valid_set):
        raise DatasetError("training and validation sets must both be non-empty")
    rng = np.random.default_rng(config.shuffle_seed)
    order = np.arange(len(train_set))
    best_acc = None
    best_epoch = 0
    best_theta = None
    since_improvement = 0
    history = []
    metrics_fh = None
    if config.metrics_path:
        metrics_fh = open(config.metrics_path, "w")
    try:
        for epoch in range(1, config.max_epochs + 1):
            perm = rng.permutation(order)
            total_nll = 0.0
            for idx in perm:
                total_nll -= train_step(model, train_set.utterances[idx], config.learning_rate)
            mean_nll = total_nll / len(train_set)
            report = evaluate(model, valid_set)
            metrics = EpochMetrics(epoch, mean_nll, report.accuracy)
            history.append(metrics)
            if metrics_fh:
                metrics_fh.write(metrics.line() + "\n")
                metrics_fh.flush()
            if log:
                print(metrics.line(), file=log)
            if best_acc is None or report.accuracy > best_acc:
                best_acc = report.accuracy
                best_epoch = epoch
                best_theta = model.store.theta.copy()
                since_improvement = 0
                if config.checkpoint_path:
                    model.save(config.checkpoint_path)
            else:
                since_improvement += 1
                if since_improvement >= config.patience:
                    break
    finally:
        if metrics_fh:
            metrics_fh.close()
    model.store.theta[:] = best_theta
    return TrainResult(
        best_accuracy=best_acc,
        best_epoch=best_epoch,
        epochs_run=len(history),
        history=history,
    )


@dataclass
class UtteranceScore:
    id: str
    counts: EditCounts

    @property
    def accuracy(self):
        return self.counts.accuracy


@dataclass
class EvalReport:
    corpus: EditCounts
    per_utterance: list

    @property
    def accuracy(self):
        """Corpus-pooled: counts are summed over utterances before dividing."""
        return self.corpus.accuracy


def decode_utterance(model, samples, sample_rate=None):
    """Raw signal -> collapsed best label path (indices). Read-only."""
    windows = model.frame_utterance(samples, sample_rate)
    scores, _ = model.score_sequence(windows)
    path, _ = crf.viterbi(scores, model.crf)
    return collapse_repeats(path)


def _remap(dataset, model):
    if dataset.alphabet is None:
        return None
    table = np.empty(dataset.alphabet.size, dtype=np.int64)
    for i, name in enumerate(dataset.alphabet.names):
        if name not in model.labels:
            raise DatasetError(f"dataset label {name!r} is unknown to the model")
        table[i] = model.labels.index(name)
    return table


def evaluate(model, dataset):
    """Decode every utterance and score it against its collapsed reference.

    Parameters are read-only here; utterances are scored in dataset order
    and the corpus accuracy pools S/D/I counts before dividing.
    """
    if not len(dataset):
        raise DatasetError("cannot evaluate on an empty dataset")
    table = _remap(dataset, model)
    per_utt = []
    corpus = EditCounts(0, 0, 0, 0)
    for utt in dataset:
        hyp = decode_utterance(model, utt.samples, utt.sample_rate)
        ref_ids = utt.labels if table is None else table[utt.labels]
        ref = collapse_repeats(ref_ids)
        counts = edit_distance(ref, hyp)
        per_utt.append(UtteranceScore(utt.id, counts))
        corpus = corpus + counts
    return EvalReport(corpus=corpus, per_utterance=per_utt)


def format_report(report, model, out=None):
    """Plain-text per-utterance S/D/I table plus the corpus line."""
    out = out or sys.stdout
    print(f"{'utterance':<12}{'S':>6}{'D':>6}{'I':>6}{'refLen':>8}{'acc':>10}", file=out)
    for row in report.per_utterance:
        c = row.counts
        print(
            f"{row.id:<12}{c.sub:>6}{c.delete:>6}{c.insert:>6}"
            f"{c.ref_len:>8}{c.accuracy:>10.4f}",
            file=out,
        )
    c = report.corpus
    print(
        f"{'corpus':<12}{c.sub:>6}{c.delete:>6}{c.insert:>6}{c.ref_len:>8}"
        f"{report.accuracy:>10.4f}",
        file=out,
    )
