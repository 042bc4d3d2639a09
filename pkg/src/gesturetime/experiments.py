"""The seven-experiment protocol: budgets, model selection, reliability.

Each driver is deterministic given (dataset, config, master seed) and writes
its reports (eval_report.csv, models.csv, reliability.csv, report.md) into an
output directory. Budgets are configurable so tests can run reduced smoke
versions of the full 55-model protocol.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import baseline as bl
from . import nnet
from .corpus import (Dataset, EyebrowMode, GestureClass, REAL_CLASSES,
                     apply_eyebrow_mode, class_distribution, split_by_speaker)
from .errors import ConfigError
from .features import (FeatureSet, dataset_matrices, fit_normalizer,
                       observed_ranges, randomize)
from .seqmetric import (EvalScores, MetricConfig,
                        render_markdown, score, write_eval_report)

DEFAULT_RUNS = ((25, 500), (25, 1000), (5, 2000))


@dataclass(frozen=True)
class Budget:
    """Training effort: (model count, epochs) groups plus the dim-draw seed."""
    runs: tuple[tuple[int, int], ...] = DEFAULT_RUNS
    master_seed: int = 0

    @property
    def total(self) -> int:
        return sum(count for count, _ in self.runs)

    @staticmethod
    def parse(text: str, master_seed: int = 0) -> "Budget":
        """Parse '25x500,25x1000,5x2000' into a Budget."""
        runs = []
        for part in text.split(","):
            count, _, epochs = part.strip().partition("x")
            try:
                runs.append((int(count), int(epochs)))
            except ValueError:
                raise ConfigError(f"bad budget component {part!r}") from None
        return Budget(runs=tuple(runs), master_seed=master_seed)


@dataclass(frozen=True)
class SelectionRule:
    weights: np.ndarray  # class frequencies over the four real classes
    floor: float = 0.05


@dataclass
class PreparedData:
    """Split datasets turned into normalized model-ready tensors."""
    X: dict[str, np.ndarray]       # part -> (n, l, d)
    Y: dict[str, np.ndarray]       # part -> (n, l)
    n_real: dict[str, np.ndarray]
    stats: object                  # training DistributionStats
    normalizer: object
    ranges: np.ndarray             # per-column (lo, hi) of normalized train
    feature_set: FeatureSet
    class_weights: np.ndarray


@dataclass
class ModelRun:
    index: int
    hyper: nnet.Hyper
    checkpoint: nnet.ModelCheckpoint
    train_losses: list[float]
    val_scores: EvalScores
    test_scores: EvalScores


@dataclass
class ExperimentResult:
    runs: list[ModelRun]
    selected: int
    flagged: bool
    prep: PreparedData


def prepare_inputs(splits: tuple[Dataset, Dataset, Dataset],
                   feature_set: FeatureSet,
                   eyebrow_mode: EyebrowMode = EyebrowMode.HandOnly
                   ) -> PreparedData:
    parts = dict(zip(("train", "val", "test"),
                     (apply_eyebrow_mode(ds, eyebrow_mode) for ds in splits)))
    train = parts["train"]
    raw_train = dataset_matrices(train, feature_set)
    n_real_train = [u.n_frames for u in train.samples]
    normalizer = fit_normalizer(list(raw_train), feature_set,
                                n_real=n_real_train)
    X, Y, n_real = {}, {}, {}
    for name, ds in parts.items():
        X[name] = dataset_matrices(ds, feature_set, normalizer)
        Y[name] = np.stack([u.labels for u in ds.samples])
        n_real[name] = np.array([u.n_frames for u in ds.samples])
    stats = class_distribution(train)
    ranges = observed_ranges(list(X["train"]),
                             n_real=list(n_real["train"]))
    return PreparedData(X=X, Y=Y, n_real=n_real, stats=stats,
                        normalizer=normalizer, ranges=ranges,
                        feature_set=feature_set,
                        class_weights=nnet.class_weights(stats))


def evaluate(params: dict, X: np.ndarray, Y: np.ndarray, cfg: MetricConfig
             ) -> EvalScores:
    preds = nnet.predict(params, X)
    return score(list(zip(preds, Y)), cfg)


def draw_hypers(budget: Budget, feature_set: FeatureSet,
                learning_rate: float = 1e-3, batch_size: int = 16
                ) -> list[nnet.Hyper]:
    """Seed-deterministic dim/seed draws for every model in the budget."""
    rng = np.random.default_rng(budget.master_seed)
    d = feature_set.dim
    hypers = []
    for count, epochs in budget.runs:
        for _ in range(count):
            hypers.append(nnet.Hyper(
                enc_dim=int(rng.integers(1, d + 1)),
                dec_dim=int(rng.integers(1, d + 1)),
                epochs=epochs,
                seed=int(rng.integers(0, 2**31 - 1)),
                feature_set=feature_set,
                learning_rate=learning_rate,
                batch_size=batch_size))
    return hypers


def _train_one(args):
    prep, hyper, cfg, index = args
    result = nnet.train(prep.X["train"], prep.Y["train"], hyper,
                        prep.class_weights, normalizer=prep.normalizer,
                        stats=prep.stats)
    params = result.checkpoint.params
    return ModelRun(
        index=index, hyper=hyper, checkpoint=result.checkpoint,
        train_losses=result.epoch_losses,
        val_scores=evaluate(params, prep.X["val"], prep.Y["val"], cfg),
        test_scores=evaluate(params, prep.X["test"], prep.Y["test"], cfg))


def run_budget(splits, feature_set: FeatureSet, eyebrow_mode: EyebrowMode,
               budget: Budget, cfg: MetricConfig,
               learning_rate: float = 1e-3, batch_size: int = 16,
               workers: int | None = None
               ) -> tuple[list[ModelRun], PreparedData]:
    prep = prepare_inputs(splits, feature_set, eyebrow_mode)
    hypers = draw_hypers(budget, feature_set, learning_rate, batch_size)
    tasks = [(prep, hy, cfg, i) for i, hy in enumerate(hypers)]
    if workers is None:
        workers = int(os.environ.get("GESTURETIME_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_train_one, tasks))
    else:
        runs = [_train_one(t) for t in tasks]
    runs.sort(key=lambda r: r.index)
    return runs, prep


def _weighted_val(run: ModelRun, rule: SelectionRule) -> float:
    total = 0.0
    for w, cls in zip(rule.weights, REAL_CLASSES):
        s = run.val_scores[cls]
        if s.defined:
            total += w * s.alignment
    return total


def _qualifies(run: ModelRun, rule: SelectionRule) -> bool:
    for cls in REAL_CLASSES:
        s = run.val_scores[cls]
        if not s.defined or s.alignment < rule.floor:
            return False
    return True


def selection_rule_from(prep: PreparedData) -> SelectionRule:
    return SelectionRule(weights=np.array(
        [prep.stats.proportion(c) for c in REAL_CLASSES]))


def select_model(runs: list[ModelRun], rule: SelectionRule
                 ) -> tuple[int, bool]:
    """Best weighted validation alignment among floor-qualifying models.

    Returns (index, flagged); flagged means no model met the floors and the
    unconstrained argmax was used instead. Ties go to the lowest index.
    """
    if not runs:
        raise ConfigError("select_model needs at least one run")
    qualifying = [r for r in runs if _qualifies(r, rule)]
    flagged = not qualifying
    pool = runs if flagged else qualifying
    best = max(pool, key=lambda r: (_weighted_val(r, rule), -r.index))
    return best.index, flagged


@dataclass
class ClassReliability:
    mean_val: float | None
    mean_test: float | None
    correlation: float | None  # None when undefined (zero variance / absent)


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    if len(x) < 2 or np.std(x) == 0.0 or np.std(y) == 0.0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def _rank(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    ranks[order] = np.arange(len(x), dtype=float)
    return ranks


def reliability(runs: list[ModelRun], method: str = "pearson"
                ) -> dict[GestureClass, ClassReliability]:
    """Correlation between validation and test alignments across models."""
    out = {}
    for cls in REAL_CLASSES:
        val = [r.val_scores[cls].alignment for r in runs]
        test = [r.test_scores[cls].alignment for r in runs]
        if any(v is None for v in val) or any(t is None for t in test):
            out[cls] = ClassReliability(None, None, None)
            continue
        v = np.array(val)
        t = np.array(test)
        if method == "spearman":
            corr = _pearson(_rank(v), _rank(t))
        else:
            corr = _pearson(v, t)
        out[cls] = ClassReliability(float(v.mean()), float(t.mean()), corr)
    return out


# -------------------------------------------------------------- report files

def _fmt(x) -> str:
    return "NA" if x is None else f"{x:.6f}"


def write_models_csv(path, runs: list[ModelRun], rule: SelectionRule) -> None:
    cols = (["index", "enc_dim", "dec_dim", "epochs", "seed"]
            + [f"val_align_{c.name}" for c in REAL_CLASSES]
            + [f"test_align_{c.name}" for c in REAL_CLASSES]
            + ["val_weighted", "qualifies"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for r in runs:
            row = [str(r.index), str(r.hyper.enc_dim), str(r.hyper.dec_dim),
                   str(r.hyper.epochs), str(r.hyper.seed)]
            row += [_fmt(r.val_scores[c].alignment) for c in REAL_CLASSES]
            row += [_fmt(r.test_scores[c].alignment) for c in REAL_CLASSES]
            row += [_fmt(_weighted_val(r, rule)), str(int(_qualifies(r, rule)))]
            fh.write(",".join(row) + "\n")


def write_reliability_csv(path, rel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("class,mean_val_alignment,mean_test_alignment,correlation\n")
        for cls, r in rel.items():
            fh.write(f"{cls.name},{_fmt(r.mean_val)},{_fmt(r.mean_test)},"
                     f"{_fmt(r.correlation)}\n")


def reliability_markdown(rel, title: str) -> str:
    lines = [f"### {title}", "",
             "| Class | Mean validation | Mean test | Correlation |",
             "|---|---|---|---|"]
    for cls, r in rel.items():
        lines.append(f"| {cls.name} | {_fmt(r.mean_val)} | {_fmt(r.mean_test)} "
                     f"| {_fmt(r.correlation)} |")
    lines.append("")
    return "\n".join(lines)


def _write_report_md(out_dir, sections: list[str]) -> None:
    with open(os.path.join(out_dir, "report.md"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(sections))


# ----------------------------------------------------------------- drivers

def exp_random(splits, cfg: MetricConfig, out_dir, repetitions: int = 55,
               seed: int = 0) -> EvalScores:
    """Experiment 1: first-order chain baseline, averaged over repetitions."""
    os.makedirs(out_dir, exist_ok=True)
    train, _, test = splits
    chain = bl.estimate_chain([u.labels for u in train.samples])
    truth = [u.labels for u in test.samples]
    mean, reports = bl.run_baseline(chain, truth, repetitions, cfg, seed=seed)
    bl.save_chain(os.path.join(out_dir, "chain.txt"), chain)
    write_eval_report(os.path.join(out_dir, "eval_report.csv"), mean)
    with open(os.path.join(out_dir, "repetitions.csv"), "w",
              encoding="utf-8") as fh:
        fh.write("repetition,class,alignment,insertion,deletion\n")
        for rep, r in enumerate(reports):
            for cls in r.classes:
                s = r[cls]
                fh.write(f"{rep},{cls.name},{_fmt(s.alignment)},"
                         f"{_fmt(s.insertion)},{_fmt(s.deletion)}\n")
    _write_report_md(out_dir, [
        "## Experiment 1: random output baseline", "",
        f"{repetitions} sampled prediction sets, first-order class chain "
        "estimated on the training split.", "",
        render_markdown(mean, "Mean scores over repetitions")])
    return mean


def _budget_experiment(splits, cfg, out_dir, budget, feature_set,
                       eyebrow_mode, title, workers=None) -> ExperimentResult:
    os.makedirs(out_dir, exist_ok=True)
    runs, prep = run_budget(splits, feature_set, eyebrow_mode, budget, cfg,
                            workers=workers)
    rule = selection_rule_from(prep)
    selected, flagged = select_model(runs, rule)
    rel = reliability(runs)
    write_models_csv(os.path.join(out_dir, "models.csv"), runs, rule)
    write_reliability_csv(os.path.join(out_dir, "reliability.csv"), rel)
    write_eval_report(os.path.join(out_dir, "eval_report.csv"),
                      runs[selected].test_scores)
    nnet.save_checkpoint(os.path.join(out_dir, "selected.ckpt.npz"),
                         runs[selected].checkpoint)
    sections = [f"## {title}", "",
                f"Models trained: {len(runs)} (budget "
                f"{','.join(f'{c}x{e}' for c, e in budget.runs)}).",
                f"Selected model: index {selected}"
                + (" (flagged: no model met the 0.05 alignment floors)"
                   if flagged else "") + ".", "",
                render_markdown(runs[selected].test_scores,
                                "Selected model, test scores"),
                reliability_markdown(rel, "Validation reliability")]
    _write_report_md(out_dir, sections)
    return ExperimentResult(runs=runs, selected=selected, flagged=flagged,
                            prep=prep)


def exp_full(splits, cfg: MetricConfig, out_dir, budget: Budget,
             workers=None) -> ExperimentResult:
    """Experiment 2: prosody features, full budget, selection, reliability."""
    return _budget_experiment(splits, cfg, out_dir, budget,
                              FeatureSet.Prosody3, EyebrowMode.HandOnly,
                              "Experiment 2: prosody-driven model", workers)


ABLATION_SUBSETS = {
    # names ordered as reported; values are the randomized prosody columns
    "all_random": (0, 1, 2),
    "intensity_only": (0, 1),
    "f0_and_dir": (2,),
    "f0_only": (1, 2),
    "dir_only": (0, 2),
}


def ablation_scores(result: ExperimentResult, cfg: MetricConfig,
                    subset, seed: int = 0) -> EvalScores:
    """Selected model evaluated with the given test columns randomized."""
    prep = result.prep
    run = result.runs[result.selected]
    X = prep.X["test"]
    seeds = np.random.SeedSequence(seed).generate_state(len(X))
    Xr = np.stack([
        randomize(X[i], subset, int(seeds[i]), prep.ranges,
                  n_real=int(prep.n_real["test"][i]))
        for i in range(len(X))])
    return evaluate(run.checkpoint.params, Xr, prep.Y["test"], cfg)


def exp_ablation(result: ExperimentResult, cfg: MetricConfig, out_dir,
                 seed: int = 0,
                 subsets: dict | None = None) -> dict[str, EvalScores]:
    """Experiment 3: inference-time feature randomization on the Exp-2 model."""
    os.makedirs(out_dir, exist_ok=True)
    subsets = ABLATION_SUBSETS if subsets is None else subsets
    sections = ["## Experiment 3: ablation by feature randomization", ""]
    out = {}
    for name, cols in subsets.items():
        sc = ablation_scores(result, cfg, cols, seed=seed)
        out[name] = sc
        write_eval_report(os.path.join(out_dir, f"eval_report_{name}.csv"), sc)
        sections.append(render_markdown(sc, f"Condition: {name}"))
    _write_report_md(out_dir, sections)
    return out


def exp_eyebrow(splits, cfg: MetricConfig, out_dir, budget: Budget,
                workers=None) -> dict[EyebrowMode, ExperimentResult]:
    """Experiment 4: eyebrow movements folded into the Beat class."""
    os.makedirs(out_dir, exist_ok=True)
    results = {}
    sections = ["## Experiment 4: eyebrow movements as beats", ""]
    for mode in EyebrowMode:
        sub = os.path.join(out_dir, mode.value)
        results[mode] = _budget_experiment(
            splits, cfg, sub, budget, FeatureSet.Prosody3, mode,
            f"Experiment 4 condition: {mode.value}", workers)
        run = results[mode].runs[results[mode].selected]
        beat = run.test_scores[GestureClass.Beat]
        rel = reliability(results[mode].runs)[GestureClass.Beat]
        sections.append(
            f"| {mode.value} | {_fmt(beat.alignment)} | {_fmt(beat.insertion)} "
            f"| {_fmt(beat.deletion)} | {_fmt(rel.correlation)} |")
    sections[2:2] = ["| Condition | Beat alignment | Beat insertion | "
                     "Beat deletion | Beat reliability |",
                     "|---|---|---|---|---|"]
    _write_report_md(out_dir, sections)
    return results


def exp_mfcc(splits, cfg: MetricConfig, out_dir, budget: Budget,
             workers=None) -> ExperimentResult:
    return _budget_experiment(splits, cfg, out_dir, budget, FeatureSet.Mfcc13,
                              EyebrowMode.HandOnly,
                              "Experiment 5: MFCC features", workers)


def exp_both(splits, cfg: MetricConfig, out_dir, budget: Budget,
             workers=None) -> ExperimentResult:
    return _budget_experiment(splits, cfg, out_dir, budget, FeatureSet.Both16,
                              EyebrowMode.HandOnly,
                              "Experiment 6: MFCC + prosody features", workers)


def exp_cross_speaker(dataset: Dataset, cfg: MetricConfig, out_dir,
                      budget: Budget, split_seed: int = 0,
                      workers=None) -> dict[str, ExperimentResult]:
    """Experiment 7: train on one speaker, test on the other, both ways."""
    os.makedirs(out_dir, exist_ok=True)
    results = {}
    for speaker in dataset.speakers:
        splits = split_by_speaker(dataset, speaker, split_seed)
        sub = os.path.join(out_dir, f"train_{speaker}")
        results[speaker] = _budget_experiment(
            splits, cfg, sub, budget, FeatureSet.Prosody3,
            EyebrowMode.HandOnly,
            f"Experiment 7: trained on speaker {speaker}", workers)
    return results
