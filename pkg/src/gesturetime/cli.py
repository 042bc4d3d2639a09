"""Command-line entry point.

Commands: ingest, synth, train, eval, baseline, experiment <name>, report.
Configuration is a key = value text file; every flag overrides the matching
config key. Each command copies the effective configuration into its output
directory for provenance. Exit codes: 0 success, 2 usage/config error,
3 input-format error, 4 numeric failure. The only honored environment
variable is GESTURETIME_WORKERS (parallel trainings inside a budget).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict, dataclass, fields

from . import experiments as ex
from . import ingest, nnet
from .corpus import (Dataset, EyebrowMode, class_distribution,
                     labels_from_names, split_random)
from .errors import ConfigError, InputFormatError, NumericError
from .features import FeatureSet
from .seqmetric import MetricConfig, render_markdown, score, write_eval_report
from .synth import generate_synthetic_raw

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4


@dataclass
class RunConfig:
    words: str = ""
    gestures: str = ""
    aus: str = ""
    features: str = ""
    bundle: str = ""
    out: str = "out"
    frame_ms: int = 100
    threshold: int = 2
    feature_set: str = "Prosody3"
    eyebrow_mode: str = "HandOnly"
    seed: int = 0
    split_seed: int = 0
    budget: str = "25x500,25x1000,5x2000"
    baseline_reps: int = 55
    n_samples: int = 200
    max_len_frames: int = 24
    epochs: int = 500
    enc_dim: int = 3
    dec_dim: int = 3
    learning_rate: float = 1e-3
    batch_size: int = 16

    @staticmethod
    def load(path) -> "RunConfig":
        cfg = RunConfig()
        entries = ingest.read_manifest(path)
        valid = {f.name: f.type for f in fields(RunConfig)}
        for key, value in entries.items():
            if key not in valid:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            current = getattr(cfg, key)
            setattr(cfg, key, type(current)(value))
        return cfg

    def metric_config(self) -> MetricConfig:
        return MetricConfig(threshold=self.threshold)

    def feature_set_enum(self) -> FeatureSet:
        try:
            return FeatureSet(self.feature_set)
        except ValueError:
            raise ConfigError(f"unknown feature set {self.feature_set!r}") from None

    def eyebrow_mode_enum(self) -> EyebrowMode:
        try:
            return EyebrowMode(self.eyebrow_mode)
        except ValueError:
            raise ConfigError(f"unknown eyebrow mode {self.eyebrow_mode!r}") from None

    def write_provenance(self, out_dir) -> None:
        os.makedirs(out_dir, exist_ok=True)
        ingest.write_manifest(os.path.join(out_dir, "config_used.txt"),
                              asdict(self))


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    return cfg


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    return _apply_overrides(cfg, args)


def _require(cfg: RunConfig, *keys) -> None:
    for key in keys:
        if not getattr(cfg, key):
            raise ConfigError(f"missing required setting {key!r} "
                              f"(flag --{key.replace('_', '-')})")


def _load_splits(cfg: RunConfig):
    ds = ingest.load_bundle(cfg.bundle)
    return ds, split_random(ds, cfg.split_seed)


def _write_split_file(out_dir, ds: Dataset, splits) -> None:
    index_of = {id(u): i for i, u in enumerate(ds.samples)}
    with open(os.path.join(out_dir, "splits.csv"), "w", encoding="utf-8") as fh:
        fh.write("sample_index,part\n")
        for name, part in zip(("train", "val", "test"), splits):
            for u in part.samples:
                fh.write(f"{index_of[id(u)]},{name}\n")


def cmd_synth(cfg: RunConfig) -> int:
    corpus = generate_synthetic_raw(cfg.seed, cfg.n_samples, cfg.max_len_frames,
                                    frame_ms=cfg.frame_ms)
    out = cfg.out
    cfg.write_provenance(out)
    ingest.write_interchange(out, corpus.channels)
    ingest.save_bundle(os.path.join(out, "bundle"), corpus.dataset,
                       extra_manifest={"source": "synthetic",
                                       "seed": cfg.seed})
    print(f"synthetic corpus: {len(corpus.dataset.samples)} samples "
          f"-> {out}/bundle")
    return 0


def cmd_ingest(cfg: RunConfig) -> int:
    _require(cfg, "words", "gestures", "aus", "features")
    ds = ingest.build_dataset(
        ingest.read_words_tsv(cfg.words),
        ingest.read_gestures_tsv(cfg.gestures),
        ingest.read_aus_csv(cfg.aus),
        ingest.read_features_csv(cfg.features),
        frame_ms=cfg.frame_ms)
    cfg.write_provenance(cfg.out)
    bundle_dir = os.path.join(cfg.out, "bundle")
    ingest.save_bundle(bundle_dir, ds,
                       extra_manifest={"source": "ingest",
                                       "split_seed": cfg.split_seed})
    stats = class_distribution(ingest.load_bundle(bundle_dir))
    print(f"ingested {stats.n} samples, padded length {stats.l}")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    _require(cfg, "bundle")
    ds, splits = _load_splits(cfg)
    prep = ex.prepare_inputs(splits, cfg.feature_set_enum(),
                             cfg.eyebrow_mode_enum())
    hyper = nnet.Hyper(enc_dim=cfg.enc_dim, dec_dim=cfg.dec_dim,
                       epochs=cfg.epochs, seed=cfg.seed,
                       feature_set=cfg.feature_set_enum(),
                       learning_rate=cfg.learning_rate,
                       batch_size=cfg.batch_size)
    result = nnet.train(prep.X["train"], prep.Y["train"], hyper,
                        prep.class_weights, normalizer=prep.normalizer,
                        stats=prep.stats)
    cfg.write_provenance(cfg.out)
    _write_split_file(cfg.out, ds, splits)
    nnet.save_checkpoint(os.path.join(cfg.out, "model.ckpt.npz"),
                         result.checkpoint)
    with open(os.path.join(cfg.out, "loss_log.csv"), "w",
              encoding="utf-8") as fh:
        fh.write("epoch,train_loss\n")
        for i, l in enumerate(result.epoch_losses):
            fh.write(f"{i},{l:.9f}\n")
    val = ex.evaluate(result.checkpoint.params, prep.X["val"], prep.Y["val"],
                      cfg.metric_config())
    write_eval_report(os.path.join(cfg.out, "val_report.csv"), val)
    print(render_markdown(val, "Validation scores"))
    return 0


def _read_label_file(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            names = line.split()
            if not names:
                continue
            try:
                out.append(labels_from_names(names))
            except InputFormatError as exc:
                raise InputFormatError(f"{path}: line {lineno}: {exc}") from None
    if not out:
        raise InputFormatError(f"{path}: no label sequences")
    return out


def cmd_eval(cfg: RunConfig, pred_path, truth_path) -> int:
    preds = _read_label_file(pred_path)
    truths = _read_label_file(truth_path)
    if len(preds) != len(truths):
        raise InputFormatError(
            f"{len(preds)} prediction lines vs {len(truths)} truth lines")
    sc = score(list(zip(preds, truths)), cfg.metric_config())
    cfg.write_provenance(cfg.out)
    write_eval_report(os.path.join(cfg.out, "eval_report.csv"), sc)
    print(render_markdown(sc, "Evaluation"))
    return 0


def cmd_baseline(cfg: RunConfig) -> int:
    _require(cfg, "bundle")
    ds, splits = _load_splits(cfg)
    cfg.write_provenance(cfg.out)
    _write_split_file(cfg.out, ds, splits)
    mean = ex.exp_random(splits, cfg.metric_config(), cfg.out,
                         repetitions=cfg.baseline_reps, seed=cfg.seed)
    print(render_markdown(mean, "Baseline mean scores"))
    return 0


def cmd_experiment(cfg: RunConfig, name: str) -> int:
    _require(cfg, "bundle")
    valid = {f"exp{i}" for i in range(1, 8)}
    if name not in valid:
        raise ConfigError(f"unknown experiment {name!r}; choose from "
                          f"{sorted(valid)}")
    ds, splits = _load_splits(cfg)
    metric = cfg.metric_config()
    budget = ex.Budget.parse(cfg.budget, master_seed=cfg.seed)
    out = cfg.out
    cfg.write_provenance(out)
    _write_split_file(out, ds, splits)
    if name == "exp1":
        ex.exp_random(splits, metric, out, repetitions=cfg.baseline_reps,
                      seed=cfg.seed)
    elif name == "exp2":
        ex.exp_full(splits, metric, out, budget)
    elif name == "exp3":
        result = ex.exp_full(splits, metric, os.path.join(out, "exp2_model"),
                             budget)
        ex.exp_ablation(result, metric, out, seed=cfg.seed)
    elif name == "exp4":
        ex.exp_eyebrow(splits, metric, out, budget)
    elif name == "exp5":
        ex.exp_mfcc(splits, metric, out, budget)
    elif name == "exp6":
        ex.exp_both(splits, metric, out, budget)
    elif name == "exp7":
        ex.exp_cross_speaker(ds, metric, out, budget,
                             split_seed=cfg.split_seed)
    print(f"{name} reports written to {out}")
    return 0


def cmd_report(cfg: RunConfig, directory) -> int:
    """Re-render report.md from the CSV artifacts persisted in a directory."""
    sections = []
    for fname in sorted(os.listdir(directory)):
        path = os.path.join(directory, fname)
        if fname.startswith("eval_report") and fname.endswith(".csv"):
            with open(path, encoding="utf-8") as fh:
                rows = [line.strip().split(",") for line in fh]
            lines = [f"### {fname}", "",
                     "| " + " | ".join(rows[0]) + " |",
                     "|" + "---|" * len(rows[0])]
            lines += ["| " + " | ".join(r) + " |" for r in rows[1:]]
            sections.append("\n".join(lines) + "\n")
        elif fname in ("models.csv", "reliability.csv", "repetitions.csv"):
            sections.append(f"### {fname}\n\nsee `{fname}`\n")
    if not sections:
        raise InputFormatError(f"{directory}: no report CSVs found")
    with open(os.path.join(directory, "report.md"), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(sections))
    print(f"report.md regenerated in {directory}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gesturetime",
        description="Gesture-timing prediction and evaluation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--threshold", type=int,
                       help="block-matching distance threshold in frames")
        p.add_argument("--feature-set", dest="feature_set",
                       choices=[fs.value for fs in FeatureSet])
        p.add_argument("--eyebrow-mode", dest="eyebrow_mode",
                       choices=[m.value for m in EyebrowMode])
        p.add_argument("--split-seed", dest="split_seed", type=int)
        p.add_argument("--bundle", help="dataset bundle directory")

    p = sub.add_parser("synth", help="generate a synthetic dataset bundle")
    add_common(p)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--max-len-frames", dest="max_len_frames", type=int)

    p = sub.add_parser("ingest", help="parse interchange files into a bundle")
    add_common(p)
    p.add_argument("--words")
    p.add_argument("--gestures")
    p.add_argument("--aus")
    p.add_argument("--features")

    p = sub.add_parser("train", help="train a single model")
    add_common(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--enc-dim", dest="enc_dim", type=int)
    p.add_argument("--dec-dim", dest="dec_dim", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)

    p = sub.add_parser("eval", help="score a prediction file against truth")
    add_common(p)
    p.add_argument("pred", help="predictions, one line of class names per sample")
    p.add_argument("truth", help="ground truth in the same format")

    p = sub.add_parser("baseline", help="run the random-output baseline")
    add_common(p)
    p.add_argument("--repetitions", dest="baseline_reps", type=int)

    p = sub.add_parser("experiment", help="run one of exp1..exp7")
    add_common(p)
    p.add_argument("name", help="experiment name, exp1..exp7")
    p.add_argument("--budget", help="training budget, e.g. 25x500,25x1000,5x2000")

    p = sub.add_parser("report", help="re-render report.md from persisted CSVs")
    add_common(p)
    p.add_argument("directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.pred, args.truth)
        if args.command == "baseline":
            return cmd_baseline(cfg)
        if args.command == "experiment":
            return cmd_experiment(cfg, args.name)
        if args.command == "report":
            return cmd_report(cfg, args.directory)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
