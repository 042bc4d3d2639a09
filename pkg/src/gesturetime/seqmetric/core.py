"""Block-based sequence comparison with shift/dilation tolerance.

A label sequence is cut into maximal same-class runs ("blocks"). Prediction
and truth blocks of one class are matched one-to-one without crossings,
admitting a pair only when the city-block distance between the block
boundaries stays within a threshold. Matched mass yields the alignment
score, unmatched prediction blocks the insertion score, unmatched truth
blocks the deletion score, each normalized by the class frequency of the
ground truth side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import (GestureClass, REAL_CLASSES,
                      DistributionStats, label_distribution)
from ..errors import ConfigError
from . import backend


@dataclass(frozen=True)
class Block:
    cls: GestureClass
    start: int  # frame index, inclusive
    end: int    # frame index, exclusive

    def __len__(self):
        return self.end - self.start


@dataclass(frozen=True)
class MetricConfig:
    threshold: int = 2
    include_suffix: bool = False

    def __post_init__(self):
        if self.threshold < 0:
            raise ConfigError(f"threshold must be >= 0, got {self.threshold}")

    @property
    def classes(self) -> list[GestureClass]:
        return list(GestureClass) if self.include_suffix else list(REAL_CLASSES)


@dataclass
class ClassMatching:
    """Matching outcome for a single class within one sequence pair."""
    pairs: list[tuple[int, int]] = field(default_factory=list)  # (pred, truth) block idx
    insertions: list[int] = field(default_factory=list)         # unmatched pred idx
    deletions: list[int] = field(default_factory=list)          # unmatched truth idx


@dataclass
class Matching:
    pred_blocks: list[Block]
    truth_blocks: list[Block]
    per_class: dict[GestureClass, ClassMatching]

    def aligned_mass(self, cls: GestureClass) -> int:
        cm = self.per_class[cls]
        return sum(len(self.pred_blocks[i]) + len(self.truth_blocks[j])
                   for i, j in cm.pairs)

    def inserted_mass(self, cls: GestureClass) -> int:
        cm = self.per_class[cls]
        return sum(len(self.pred_blocks[i]) for i in cm.insertions)

    def deleted_mass(self, cls: GestureClass) -> int:
        cm = self.per_class[cls]
        return sum(len(self.truth_blocks[j]) for j in cm.deletions)


def to_blocks(labels: np.ndarray) -> list[Block]:
    """Run-length encode a label sequence into maximal class blocks."""
    blocks = []
    n = len(labels)
    start = 0
    for t in range(1, n + 1):
        if t == n or labels[t] != labels[start]:
            blocks.append(Block(GestureClass(int(labels[start])), start, t))
            start = t
    return blocks


def block_distance(bp: Block, bt: Block) -> int:
    """City-block distance between the boundaries of two same-class blocks."""
    if bp.cls != bt.cls:
        raise ConfigError(f"block classes differ: {bp.cls} vs {bt.cls}")
    return abs(bp.start - bt.start) + abs(bp.end - bt.end)


def match_blocks(pred: list[Block], truth: list[Block], cfg: MetricConfig
                 ) -> Matching:
    """Per-class optimal monotone matching between two block tilings."""
    if pred and truth and pred[-1].end != truth[-1].end:
        raise ConfigError(f"sequences have unequal lengths: "
                          f"{pred[-1].end} vs {truth[-1].end}")
    per_class = {}
    for cls in cfg.classes:
        p_idx = [i for i, b in enumerate(pred) if b.cls == cls]
        t_idx = [j for j, b in enumerate(truth) if b.cls == cls]
        pairs = backend.match_monotone(
            [pred[i].start for i in p_idx], [pred[i].end for i in p_idx],
            [truth[j].start for j in t_idx], [truth[j].end for j in t_idx],
            cfg.threshold)
        matched_p = {p for p, _ in pairs}
        matched_t = {t for _, t in pairs}
        per_class[cls] = ClassMatching(
            pairs=[(p_idx[p], t_idx[t]) for p, t in pairs],
            insertions=[p_idx[p] for p in range(len(p_idx)) if p not in matched_p],
            deletions=[t_idx[t] for t in range(len(t_idx)) if t not in matched_t])
    return Matching(pred_blocks=pred, truth_blocks=truth, per_class=per_class)


def match_sequences(pred: np.ndarray, truth: np.ndarray, cfg: MetricConfig
                    ) -> Matching:
    if len(pred) != len(truth):
        raise ConfigError(f"sequences have unequal lengths: "
                          f"{len(pred)} vs {len(truth)}")
    return match_blocks(to_blocks(pred), to_blocks(truth), cfg)


@dataclass(frozen=True)
class ClassScore:
    cls: GestureClass
    alignment: float | None   # None when the class is absent from the truth
    insertion: float | None
    deletion: float | None
    t_c: int
    p_c: float

    @property
    def defined(self) -> bool:
        return self.alignment is not None


@dataclass
class EvalScores:
    per_class: dict[GestureClass, ClassScore]
    stats: DistributionStats  # ground-truth side of the evaluated pairs
    config: MetricConfig

    def __getitem__(self, cls: GestureClass) -> ClassScore:
        return self.per_class[cls]

    @property
    def classes(self) -> list[GestureClass]:
        return list(self.per_class)


def score(pairs, cfg: MetricConfig = MetricConfig()) -> EvalScores:
    """Alignment/insertion/deletion scores over (pred, truth) sequence pairs.

    Matching is per sample; the class proportions p_c in the denominators
    come from the ground-truth side of this evaluation set.
    """
    pairs = list(pairs)
    if not pairs:
        raise ConfigError("score needs at least one (pred, truth) pair")
    stats = label_distribution([t for _, t in pairs])
    n_l = stats.n * stats.l
    aligned = {cls: 0 for cls in cfg.classes}
    inserted = {cls: 0 for cls in cfg.classes}
    deleted = {cls: 0 for cls in cfg.classes}
    for pred, truth in pairs:
        m = match_sequences(np.asarray(pred), np.asarray(truth), cfg)
        for cls in cfg.classes:
            aligned[cls] += m.aligned_mass(cls)
            inserted[cls] += m.inserted_mass(cls)
            deleted[cls] += m.deleted_mass(cls)
    per_class = {}
    for cls in cfg.classes:
        t_c = stats.count(cls)
        p_c = stats.proportion(cls)
        if t_c == 0:
            per_class[cls] = ClassScore(cls, None, None, None, 0, 0.0)
        else:
            denom = n_l * p_c
            per_class[cls] = ClassScore(
                cls,
                alignment=aligned[cls] / (2.0 * denom),
                insertion=inserted[cls] / denom,
                deletion=deleted[cls] / denom,
                t_c=t_c, p_c=p_c)
    return EvalScores(per_class=per_class, stats=stats, config=cfg)


def mean_scores(reports: list[EvalScores]) -> EvalScores:
    """Arithmetic mean of score components over repeated evaluations.

    A class must be consistently defined or consistently undefined across
    repetitions (the truth side is expected to be identical).
    """
    if not reports:
        raise ConfigError("mean_scores needs at least one report")
    first = reports[0]
    per_class = {}
    for cls in first.classes:
        entries = [r[cls] for r in reports]
        if any(e.defined != entries[0].defined for e in entries):
            raise ConfigError(f"class {cls.name} defined in some repetitions only")
        if not entries[0].defined:
            per_class[cls] = entries[0]
            continue
        per_class[cls] = ClassScore(
            cls,
            alignment=float(np.mean([e.alignment for e in entries])),
            insertion=float(np.mean([e.insertion for e in entries])),
            deletion=float(np.mean([e.deletion for e in entries])),
            t_c=entries[0].t_c, p_c=entries[0].p_c)
    return EvalScores(per_class=per_class, stats=first.stats, config=first.config)


def _fmt(x) -> str:
    return "NA" if x is None else f"{x:.6f}"


def eval_report_rows(scores: EvalScores) -> list[list[str]]:
    rows = [["class", "alignment", "insertion", "deletion", "t_c", "p_c"]]
    for cls in scores.classes:
        s = scores[cls]
        rows.append([cls.name, _fmt(s.alignment), _fmt(s.insertion),
                     _fmt(s.deletion), str(s.t_c), f"{s.p_c:.6f}"])
    return rows


def write_eval_report(path, scores: EvalScores) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in eval_report_rows(scores):
            fh.write(",".join(row) + "\n")


def render_markdown(scores: EvalScores, title: str) -> str:
    lines = [f"### {title}", "",
             "| Class | Alignment | Insertion | Deletion |",
             "|---|---|---|---|"]
    for cls in scores.classes:
        s = scores[cls]
        lines.append(f"| {cls.name} | {_fmt(s.alignment)} | "
                     f"{_fmt(s.insertion)} | {_fmt(s.deletion)} |")
    lines.append("")
    return "\n".join(lines)
