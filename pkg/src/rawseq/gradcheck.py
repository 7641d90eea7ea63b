"""Finite-difference verification of every hand-derived gradient.

Each check builds random instances, computes the analytic gradient of a
scalar probe loss, and compares it against central differences (h = 1e-5)
coordinate by coordinate. Errors are reported as the largest absolute
deviation divided by the largest gradient magnitude, so near-zero
coordinates do not blow up the ratio.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .crf import CrfParams, likelihood_gradients, log_likelihood
from .network import NetworkConfig, ParameterStore, StageSpec, build

H = 1e-5


def numeric_gradient(fn, x, h=H):
    """Central differences of the scalar ``fn()`` w.r.t. the array ``x``
    that ``fn`` reads; ``x`` is restored on return."""
    grad = np.zeros(x.shape)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        f_plus = fn()
        x[idx] = orig - h
        f_minus = fn()
        x[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad


def gradient_mismatch(analytic, numeric, eps=1e-12):
    """(relative error, flat index of the worst coordinate)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    diff = np.abs(a - n)
    scale = max(np.abs(a).max(initial=0.0), np.abs(n).max(initial=0.0), eps)
    worst = int(np.argmax(diff))
    return float(diff.flat[worst] / scale), worst


@dataclass
class CheckResult:
    name: str
    max_rel_error: float
    tolerance: float
    worst_coordinate: str

    @property
    def passed(self):
        return self.max_rel_error <= self.tolerance

    def line(self):
        status = "pass" if self.passed else "FAIL"
        return (
            f"{status}  {self.name:<12} max rel. error {self.max_rel_error:.3e} "
            f"(tolerance {self.tolerance:.0e}, worst at {self.worst_coordinate})"
        )


def _worst(results):
    """Fold per-instance (error, coordinate) pairs into the single worst."""
    err, coord = 0.0, "none"
    for e, c in results:
        if e >= err:
            err, coord = e, c
    return err, coord


def check_conv(seed=0, instances=100, tolerance=1e-6):
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(instances):
        t_in = int(rng.integers(4, 12))
        d_in = int(rng.integers(1, 4))
        d_out = int(rng.integers(1, 4))
        kw = int(rng.integers(1, min(4, t_in) + 1))
        dw = int(rng.integers(1, 4))
        if kernels.output_length(t_in, kw, dw) < 1:
            continue
        x = rng.uniform(-2, 2, (t_in, d_in))
        w = rng.uniform(-2, 2, (d_out, kw * d_in))
        b = rng.uniform(-2, 2, d_out)
        probe = rng.uniform(-1, 1, (kernels.output_length(t_in, kw, dw), d_out))

        def loss():
            return float(np.sum(probe * kernels.conv1d_forward(x, w, b, kw, dw)))

        g_x, g_w, g_b = kernels.conv1d_backward(x, w, kw, dw, probe)
        for label, ana, arr in (("x", g_x, x), ("w", g_w, w), ("b", g_b, b)):
            err, flat = gradient_mismatch(ana, numeric_gradient(loss, arr))
            found.append((err, f"conv {label} coord {tuple(int(i) for i in np.unravel_index(flat, arr.shape))}"))
    err, coord = _worst(found)
    return CheckResult("conv", err, tolerance, coord)


def check_maxpool(seed=0, instances=100, tolerance=1e-6, tie_gap=1e-3):
    rng = np.random.default_rng(seed)
    found = []
    done = 0
    while done < instances:
        t_in = int(rng.integers(3, 12))
        d = int(rng.integers(1, 4))
        kw = int(rng.integers(1, min(4, t_in) + 1))
        dw = kw
        x = rng.uniform(-2, 2, (t_in, d))
        y, argmax = kernels.maxpool_forward(x, kw, dw)
        # finite differences are meaningless at a tie, so skip near-ties
        t_out = y.shape[0]
        starts = np.arange(t_out) * dw
        ambiguous = False
        for p in range(t_out):
            win = x[starts[p] : starts[p] + kw]
            top = np.sort(win, axis=0)
            if kw > 1 and np.any(top[-1] - top[-2] < tie_gap):
                ambiguous = True
                break
        if ambiguous:
            continue
        done += 1
        probe = rng.uniform(-1, 1, y.shape)

        def loss():
            out, _ = kernels.maxpool_forward(x, kw, dw)
            return float(np.sum(probe * out))

        g_x = kernels.maxpool_backward(argmax, probe, t_in)
        err, flat = gradient_mismatch(g_x, numeric_gradient(loss, x))
        found.append((err, f"pool x coord {tuple(int(i) for i in np.unravel_index(flat, x.shape))}"))
    err, coord = _worst(found)
    return CheckResult("maxpool", err, tolerance, coord)


def check_tanh(seed=0, instances=100, tolerance=1e-6):
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(instances):
        x = rng.uniform(-2, 2, (int(rng.integers(1, 8)), int(rng.integers(1, 5))))
        probe = rng.uniform(-1, 1, x.shape)

        def loss():
            return float(np.sum(probe * kernels.tanh_forward(x)))

        g_x = kernels.tanh_backward(kernels.tanh_forward(x), probe)
        err, flat = gradient_mismatch(g_x, numeric_gradient(loss, x))
        found.append((err, f"tanh x coord {tuple(int(i) for i in np.unravel_index(flat, x.shape))}"))
    err, coord = _worst(found)
    return CheckResult("tanh", err, tolerance, coord)


def check_linear(seed=0, instances=100, tolerance=1e-6):
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(instances):
        d_in = int(rng.integers(1, 6))
        d_out = int(rng.integers(1, 6))
        x = rng.uniform(-2, 2, d_in)
        w = rng.uniform(-2, 2, (d_out, d_in))
        b = rng.uniform(-2, 2, d_out)
        probe = rng.uniform(-1, 1, d_out)

        def loss():
            return float(np.sum(probe * kernels.linear_forward(x, w, b)))

        g_x, g_w, g_b = kernels.linear_backward(x, w, probe)
        for label, ana, arr in (("x", g_x, x), ("w", g_w, w), ("b", g_b, b)):
            err, flat = gradient_mismatch(ana, numeric_gradient(loss, arr))
            found.append((err, f"linear {label} coord {tuple(int(i) for i in np.unravel_index(flat, arr.shape))}"))
    err, coord = _worst(found)
    return CheckResult("linear", err, tolerance, coord)


def check_crf(seed=0, instances=100, tolerance=1e-6):
    """Chain-likelihood gradients w.r.t. scores, transitions and the
    start vector against finite differences."""
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(instances):
        k = int(rng.integers(2, 5))
        t = int(rng.integers(1, 7))
        scores = rng.uniform(-2, 2, (t, k))
        params = CrfParams(rng.uniform(-2, 2, (k, k)), rng.uniform(-2, 2, k))
        gold = rng.integers(0, k, t).astype(np.int64)

        def loss():
            return log_likelihood(scores, params, gold)

        grads = likelihood_gradients(scores, params, gold)
        for label, ana, arr in (
            ("scores", grads.d_scores, scores),
            ("trans", grads.d_trans, params.trans),
            ("init", grads.d_init, params.init),
        ):
            err, flat = gradient_mismatch(ana, numeric_gradient(loss, arr))
            found.append((err, f"crf {label} coord {tuple(int(i) for i in np.unravel_index(flat, arr.shape))}"))
    err, coord = _worst(found)
    return CheckResult("crf", err, tolerance, coord)


def tiny_config(num_classes=3):
    """Smallest sensible two-stage network used by the deeper checks."""
    return NetworkConfig(
        stages=(
            StageSpec(conv_kw=4, conv_dw=2, filters=4, pool_kw=2),
            StageSpec(conv_kw=3, conv_dw=1, filters=4, pool_kw=2),
        ),
        hidden_units=8,
        num_classes=num_classes,
        window_samples=26,
    )


def check_network(seed=0, tolerance=1e-4):
    """Probe-loss gradient of the full conv/pool/tanh/linear chain over
    every parameter and the input window."""
    rng = np.random.default_rng(seed)
    network = build(tiny_config(), seed=int(rng.integers(2**31)))
    store = network.store
    window = rng.uniform(-1, 1, network.config.window_samples)
    probe = rng.uniform(-1, 1, network.config.num_classes)

    def loss():
        s, _ = network.score_window(window)
        return float(np.dot(probe, s))

    scores, tape = network.score_window(window)
    store.zero_grad()
    d_window = network.backward_window(tape, probe)
    found = []
    err, flat = gradient_mismatch(store.grad, numeric_gradient(loss, store.theta))
    found.append((err, store.coordinate_name(flat)))
    err, flat = gradient_mismatch(d_window.ravel(), numeric_gradient(loss, window))
    found.append((err, f"window sample {flat}"))
    err, coord = _worst(found)
    return CheckResult("network", err, tolerance, coord)


def check_end_to_end(seed=0, tolerance=1e-4, num_windows=4):
    """dL/dθ of the chain log-likelihood through the whole network + CRF
    against finite differences over every parameter."""
    rng = np.random.default_rng(seed)
    config = tiny_config()
    network = build(config, seed=int(rng.integers(2**31)))
    store = network.store
    k = config.num_classes
    full = ParameterStore(
        [(name, store.view(name).shape) for name in store.names()]
        + [("crf.trans", (k, k)), ("crf.init", (k,))]
    )
    full.theta[: store.size] = store.theta
    network.store = full
    full.view("crf.trans")[:] = rng.uniform(-0.5, 0.5, (k, k))
    full.view("crf.init")[:] = rng.uniform(-0.5, 0.5, k)
    params = CrfParams(full.view("crf.trans"), full.view("crf.init"))

    windows = rng.uniform(-1, 1, (num_windows, config.window_samples))
    gold = rng.integers(0, k, num_windows).astype(np.int64)

    def loss():
        s, _ = network.score_sequence(windows)
        return log_likelihood(s, params, gold)

    scores, tapes = network.score_sequence(windows)
    grads = likelihood_gradients(scores, params, gold)
    full.zero_grad()
    network.backward_sequence(tapes, grads.d_scores)
    full.grad_view("crf.trans")[:] += grads.d_trans
    full.grad_view("crf.init")[:] += grads.d_init

    err, flat = gradient_mismatch(full.grad, numeric_gradient(loss, full.theta))
    return CheckResult("end-to-end", err, tolerance, full.coordinate_name(flat))


def run_all(seed=0, instances=100):
    """Every suite in one list, kernel checks first."""
    return [
        check_conv(seed, instances),
        check_maxpool(seed + 1, instances),
        check_tanh(seed + 2, instances),
        check_linear(seed + 3, instances),
        check_crf(seed + 4, instances),
        check_network(seed + 5),
        check_end_to_end(seed + 6),
    ]
