"""Command-line front end: synth, train, eval, decode, gradcheck.

Exit codes: 0 on success, 1 when a check or evaluation fails, 2 on usage,
config, or data errors. Results go to standard output, errors to standard
error.
"""

import argparse
import sys
from pathlib import Path

from . import data, gradcheck, presets, trainer
from .data import SynthConfig, save_dataset, synth_generate
from .errors import ConfigError, RawseqError, TrainingDivergedError
from .model import build_model, load_model

CONFIG_KEYS = {
    "preset": str,
    "learning_rate": float,
    "max_epochs": int,
    "patience": int,
    "seed": int,
    "shuffle_seed": int,
}

CONFIG_DEFAULTS = {
    "preset": "tiny",
    "learning_rate": 1e-3,
    "max_epochs": 30,
    "patience": 5,
    "seed": 0,
    "shuffle_seed": 0,
}


def parse_config(path):
    """key=value lines; '#' starts a comment. Unknown keys are rejected
    by name, as are values that do not parse as the key's type."""
    cfg = dict(CONFIG_DEFAULTS)
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            cfg[key] = CONFIG_KEYS[key](value)
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: invalid value {value!r} for {key}"
            ) from None
    return cfg


def cmd_synth(args):
    cfg = SynthConfig(
        sample_rate=args.sample_rate,
        hop_ms=args.hop_ms,
        snr_db=args.snr,
        base_freq=args.base_freq,
        min_segment_ms=args.min_segment_ms,
        max_segment_ms=args.max_segment_ms,
    )
    dataset = synth_generate(args.classes, args.utts, cfg, seed=args.seed)
    manifest = save_dataset(dataset, args.out)
    print(f"wrote {len(dataset)} utterances, manifest {manifest}")
    return 0


def cmd_train(args):
    cfg = parse_config(args.config)
    preset = presets.get_preset(cfg["preset"])
    train_set = data.load_dataset(args.train, preset.framing)
    valid_set = data.load_dataset(args.valid, preset.framing)
    if not len(train_set) or not len(valid_set):
        raise ConfigError("training and validation manifests must be non-empty")
    k = train_set.alphabet.size
    print(presets.describe(preset, k))
    config = presets.network_config(preset, k)
    model = build_model(config, preset.framing, train_set.alphabet, seed=cfg["seed"])
    metrics_path = args.metrics or args.out + ".metrics.tsv"
    train_cfg = trainer.TrainConfig(
        learning_rate=cfg["learning_rate"],
        max_epochs=cfg["max_epochs"],
        patience=cfg["patience"],
        shuffle_seed=cfg["shuffle_seed"],
        checkpoint_path=args.out,
        metrics_path=metrics_path,
    )
    result = trainer.train(model, train_set, valid_set, train_cfg, log=sys.stdout)
    model.save(args.out)
    print(
        f"best validation accuracy {result.best_accuracy:.4f} at epoch "
        f"{result.best_epoch}; model {args.out}, metrics {metrics_path}"
    )
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    dataset = data.load_dataset(args.data, model.framing)
    report = trainer.evaluate(model, dataset)
    trainer.format_report(report, model)
    print(f"corpus accuracy {report.accuracy:.4f}")
    return 0


def cmd_decode(args):
    model = load_model(args.model)
    samples, rate = data.load_signal(args.signal)
    path = trainer.decode_utterance(model, samples, rate)
    print(" ".join(model.labels.names[i] for i in path))
    return 0


def cmd_gradcheck(args):
    results = gradcheck.run_all(seed=args.seed, instances=args.instances)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(r.line())
    if failed:
        names = ", ".join(r.name for r in failed)
        print(f"gradient check failed: {names}", file=sys.stderr)
        return 1
    print("all gradient checks passed")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rawseq",
        description="Sequence labeling over raw sampled signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--utts", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr", type=float, default=20.0, help="signal-to-noise ratio in dB")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sample-rate", type=int, default=8000)
    p.add_argument("--hop-ms", type=float, default=5.0)
    p.add_argument("--base-freq", type=float, default=300.0)
    p.add_argument("--min-segment-ms", type=float, default=30.0)
    p.add_argument("--max-segment-ms", type=float, default=200.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on manifest datasets")
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--train", required=True, help="training manifest")
    p.add_argument("--valid", required=True, help="validation manifest")
    p.add_argument("--out", required=True, help="model output path")
    p.add_argument("--metrics", default=None, help="metrics log path (default <out>.metrics.tsv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a model against a labeled manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("decode", help="print the label sequence for one signal file")
    p.add_argument("--model", required=True)
    p.add_argument("--signal", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("gradcheck", help="finite-difference check of every gradient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=100)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RawseqError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
