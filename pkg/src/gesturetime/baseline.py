"""Random-output baseline: a first-order class chain fit on training labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CLASS_NAMES, N_CLASSES
from .errors import ConfigError
from .seqmetric import EvalScores, MetricConfig, mean_scores, score


@dataclass(frozen=True)
class ClassChain:
    initial: np.ndarray     # start-class probabilities, shape (5,)
    transition: np.ndarray  # row-stochastic, shape (5, 5)

    def __post_init__(self):
        if self.initial.shape != (N_CLASSES,) or \
                self.transition.shape != (N_CLASSES, N_CLASSES):
            raise ConfigError("chain has wrong shape")
        if abs(self.initial.sum() - 1.0) > 1e-9 or \
                np.any(np.abs(self.transition.sum(axis=1) - 1.0) > 1e-9):
            raise ConfigError("chain probabilities do not sum to 1")
        if np.any(self.initial < 0) or np.any(self.transition < 0):
            raise ConfigError("chain has negative probabilities")


def estimate_chain(train_labels: list[np.ndarray]) -> ClassChain:
    """Empirical start distribution and adjacent-pair transition frequencies."""
    if not train_labels:
        raise ConfigError("estimate_chain needs at least one sequence")
    initial = np.zeros(N_CLASSES)
    counts = np.zeros((N_CLASSES, N_CLASSES))
    for y in train_labels:
        initial[int(y[0])] += 1
        np.add.at(counts, (y[:-1].astype(int), y[1:].astype(int)), 1)
    initial /= initial.sum()
    transition = np.zeros_like(counts)
    for c in range(N_CLASSES):
        total = counts[c].sum()
        if total > 0:
            transition[c] = counts[c] / total
        else:
            transition[c, c] = 1.0  # unseen state: self-loop
    return ClassChain(initial=initial, transition=transition)


def sample_sequence(chain: ClassChain, l: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = np.empty(l, dtype=np.int8)
    out[0] = rng.choice(N_CLASSES, p=chain.initial)
    for t in range(1, l):
        out[t] = rng.choice(N_CLASSES, p=chain.transition[out[t - 1]])
    return out


def run_baseline(chain: ClassChain, truth_labels: list[np.ndarray],
                 repetitions: int = 55, cfg: MetricConfig = MetricConfig(),
                 seed: int = 0) -> tuple[EvalScores, list[EvalScores]]:
    """Mean scores of `repetitions` sampled prediction sets vs the truth."""
    if repetitions < 1:
        raise ConfigError(f"repetitions must be >= 1, got {repetitions}")
    l = len(truth_labels[0])
    reports = []
    seeds = np.random.SeedSequence(seed).spawn(repetitions)
    for rep_seq in seeds:
        child = rep_seq.generate_state(len(truth_labels))
        preds = [sample_sequence(chain, l, int(s)) for s in child]
        reports.append(score(list(zip(preds, truth_labels)), cfg))
    return mean_scores(reports), reports


def save_chain(path, chain: ClassChain) -> None:
    """Plain-text matrix file with labeled rows/columns."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# first-order gesture class chain\n")
        fh.write("initial\t" + "\t".join(CLASS_NAMES) + "\n")
        fh.write("\t" + "\t".join(f"{p:.12g}" for p in chain.initial) + "\n")
        fh.write("transition\tfrom\\to\t" + "\t".join(CLASS_NAMES) + "\n")
        for name, row in zip(CLASS_NAMES, chain.transition):
            fh.write(f"\t{name}\t" + "\t".join(f"{p:.12g}" for p in row) + "\n")


def load_chain(path) -> ClassChain:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    initial = np.array([float(x) for x in lines[1].strip().split("\t")])
    rows = []
    for ln in lines[3:3 + N_CLASSES]:
        rows.append([float(x) for x in ln.strip().split("\t")[1:]])
    return ClassChain(initial=initial, transition=np.array(rows))
