"""Time the hot kernels on every available backend and report speedups.

Run as ``python benchmarks/bench_kernels.py [--repeat N]`` from a checkout
with the package installed. Sizes mimic one window of the 16 kHz presets.
"""

import argparse
import time

import numpy as np

from rawseq import kernels


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(rng):
    x = rng.uniform(-1, 1, (1600, 1))
    w = rng.uniform(-1, 1, (100, 10))
    b = rng.uniform(-1, 1, 100)
    t_out = kernels.output_length(1600, 10, 10)
    g_conv = rng.uniform(-1, 1, (t_out, 100))
    pool_in = rng.uniform(-1, 1, (t_out, 100))
    _, tape = kernels.maxpool_forward(pool_in, 3, 3)
    g_pool = rng.uniform(-1, 1, (kernels.output_length(t_out, 3, 3), 100))
    scores = rng.uniform(-1, 1, (400, 40))
    trans = rng.uniform(-1, 1, (40, 40))
    init = rng.uniform(-1, 1, 40)
    return [
        ("conv fwd", lambda: kernels.conv1d_forward(x, w, b, 10, 10)),
        ("conv bwd", lambda: kernels.conv1d_backward(x, w, 10, 10, g_conv)),
        ("pool fwd", lambda: kernels.maxpool_forward(pool_in, 3, 3)),
        ("pool bwd", lambda: kernels.maxpool_backward(tape, g_pool, t_out)),
        ("crf alpha", lambda: kernels.crf_alpha(scores, trans, init)),
        ("crf beta", lambda: kernels.crf_beta(scores, trans)),
        ("viterbi", lambda: kernels.crf_viterbi(scores, trans, init)),
    ]


def train_step_case(backend_name):
    """One full ascent step on a synthetic utterance, all kernels involved."""
    from rawseq.data import synth_generate
    from rawseq.model import build_model
    from rawseq.presets import get_preset, network_config
    from rawseq.trainer import train_step

    preset = get_preset("tiny")
    dataset = synth_generate(5, 1, seed=7)
    model = build_model(
        network_config(preset, 5), preset.framing, dataset.alphabet, seed=0
    )
    utt = dataset.utterances[0]
    return lambda: train_step(model, utt, 1e-3)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    names = kernels.available_backends()
    print(f"backends: {', '.join(names)}")
    results = {}
    for name in names:
        previous = kernels.use_backend(name)
        try:
            rng = np.random.default_rng(0)
            rows = {}
            for label, fn in _cases(rng):
                rows[label] = _time(fn, args.repeat)
            rows["train step"] = _time(train_step_case(name), max(1, args.repeat // 2))
            results[name] = rows
        finally:
            kernels.use_backend(previous)

    labels = list(next(iter(results.values())))
    header = f"{'kernel':<12}" + "".join(f"{n:>14}" for n in names)
    if len(names) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for label in labels:
        row = f"{label:<12}"
        for n in names:
            row += f"{results[n][label] * 1e6:>12.1f}us"
        if len(names) > 1:
            row += f"{results['python'][label] / results['compiled'][label]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
