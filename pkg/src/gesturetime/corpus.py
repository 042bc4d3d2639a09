"""Corpus handling: utterance segmentation, gesture class tracks, padding, splits.

Label sequences are numpy int8 arrays holding ``GestureClass`` values, one
entry per 100 ms frame. Feature rows travel alongside as an (n_frames, 16)
float64 array in the fixed column order f0, f0_dir, intensity, mfcc00..mfcc12.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, InputFormatError

FRAME_MS_DEFAULT = 100
IPU_GAP_MS_DEFAULT = 200
N_RAW_FEATURES = 16  # f0, f0_dir, intensity, 13 mfcc


class GestureClass(enum.IntEnum):
    NoGesture = 0
    Beat = 1
    IdeationalOther = 2
    IdeationalStroke = 3
    Suffix = 4


N_CLASSES = len(GestureClass)
CLASS_NAMES = [c.name for c in GestureClass]
REAL_CLASSES = [GestureClass.NoGesture, GestureClass.Beat,
                GestureClass.IdeationalOther, GestureClass.IdeationalStroke]

_NAME_TO_CODE = {c.name: int(c) for c in GestureClass}


def labels_from_names(names) -> np.ndarray:
    try:
        return np.array([_NAME_TO_CODE[n] for n in names], dtype=np.int8)
    except KeyError as exc:
        raise InputFormatError(f"unknown gesture class {exc.args[0]!r}") from None


def labels_to_names(labels: np.ndarray) -> list[str]:
    return [CLASS_NAMES[int(c)] for c in labels]


class GesturePhase(enum.Enum):
    Preparation = "Preparation"
    PreStrokeHold = "PreStrokeHold"
    Stroke = "Stroke"
    PostStrokeHold = "PostStrokeHold"
    PartialRetraction = "PartialRetraction"
    Retraction = "Retraction"
    Recoil = "Recoil"


class GestureType(enum.Enum):
    Iconic = "Iconic"
    Metaphoric = "Metaphoric"
    ConcreteDeixis = "ConcreteDeixis"
    AbstractDeixis = "AbstractDeixis"
    NominationDeixis = "NominationDeixis"
    Beat = "Beat"
    Emblem = "Emblem"


class BrowDirection(enum.Enum):
    Up = "Up"
    Down = "Down"


class EyebrowMode(enum.Enum):
    HandOnly = "HandOnly"
    WithUpward = "WithUpward"
    WithUpDown = "WithUpDown"


@dataclass(frozen=True)
class WordToken:
    text: str
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if self.start_ms >= self.end_ms:
            raise InputFormatError(
                f"word {self.text!r}: start_ms {self.start_ms} >= end_ms {self.end_ms}")


@dataclass(frozen=True)
class GestureAnnotation:
    phase: GesturePhase
    gtype: GestureType
    communicative: bool
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if self.start_ms >= self.end_ms:
            raise InputFormatError(
                f"gesture annotation: start_ms {self.start_ms} >= end_ms {self.end_ms}")


@dataclass(frozen=True)
class AuFrame:
    au_id: str  # "AU1", "AU2" or "AU4"
    value: float
    confidence: float
    timestamp_ms: int

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise InputFormatError(f"AU confidence {self.confidence} outside [0,1]")
        if self.au_id not in ("AU1", "AU2", "AU4"):
            raise InputFormatError(f"unknown AU id {self.au_id!r}")


@dataclass(frozen=True)
class BrowInterval:
    """Eyebrow movement interval in utterance frame coordinates [start, end)."""
    start: int
    end: int
    direction: BrowDirection


@dataclass(frozen=True)
class Utterance:
    speaker: str
    recording: str
    start_ms: int
    end_ms: int
    labels: np.ndarray            # int8 codes, possibly padded with Suffix
    features: np.ndarray          # (len(labels), 16) float64, padded rows zero
    brows: tuple[BrowInterval, ...] = ()
    n_frames: int = -1            # unpadded frame count; -1 means len(labels)

    def __post_init__(self):
        if self.n_frames < 0:
            object.__setattr__(self, "n_frames", len(self.labels))
        if self.features.shape != (len(self.labels), N_RAW_FEATURES):
            raise ConfigError(
                f"feature shape {self.features.shape} does not match "
                f"{len(self.labels)} label frames")


@dataclass
class Dataset:
    samples: list[Utterance]
    frame_ms: int = FRAME_MS_DEFAULT
    padded_len: int | None = None  # common l once padded, else None

    def __len__(self):
        return len(self.samples)

    @property
    def speakers(self) -> list[str]:
        return sorted({u.speaker for u in self.samples})


@dataclass(frozen=True)
class DistributionStats:
    """Per-class frame totals over a padded dataset (n samples of length l)."""
    n: int
    l: int
    counts: np.ndarray       # int64, one per GestureClass
    proportions: np.ndarray  # counts / (n*l)

    def count(self, cls: GestureClass) -> int:
        return int(self.counts[int(cls)])

    def proportion(self, cls: GestureClass) -> float:
        return float(self.proportions[int(cls)])


def segment_ipus(words: list[WordToken], gap_ms: int = IPU_GAP_MS_DEFAULT
                 ) -> list[tuple[int, int]]:
    """Group words into inter-pausal units split at silences >= gap_ms."""
    if not words:
        return []
    for prev, cur in zip(words, words[1:]):
        if cur.start_ms < prev.end_ms:
            raise InputFormatError(
                f"word tokens overlap or are unsorted near {cur.start_ms} ms")
    spans = []
    start = words[0].start_ms
    end = words[0].end_ms
    for w in words[1:]:
        if w.start_ms - end >= gap_ms:
            spans.append((start, end))
            start = w.start_ms
        end = w.end_ms
    spans.append((start, end))
    return spans


def derive_class_track(gestures: list[GestureAnnotation],
                       utterance_span: tuple[int, int],
                       frame_ms: int = FRAME_MS_DEFAULT) -> np.ndarray:
    """Frame-level class track for one utterance (unpadded, never Suffix).

    Each frame is labeled from the communicative annotations covering its
    midpoint, with precedence IdeationalStroke > IdeationalOther > Beat.
    """
    start_ms, end_ms = utterance_span
    n_frames = (end_ms - start_ms) // frame_ms
    labels = np.full(n_frames, GestureClass.NoGesture, dtype=np.int8)
    comm = [g for g in gestures if g.communicative]
    for t in range(n_frames):
        mid = start_ms + t * frame_ms + frame_ms / 2
        covering = [g for g in comm if g.start_ms <= mid < g.end_ms]
        if any(g.gtype != GestureType.Beat and g.phase == GesturePhase.Stroke
               for g in covering):
            labels[t] = GestureClass.IdeationalStroke
        elif any(g.gtype != GestureType.Beat for g in covering):
            labels[t] = GestureClass.IdeationalOther
        elif covering:
            labels[t] = GestureClass.Beat
    return labels


def filter_au_blocks(frames: list[AuFrame], conf_min: float = 0.85,
                     mean_min: float = 1.0, frame_ms: int = FRAME_MS_DEFAULT
                     ) -> list[tuple[int, int, BrowDirection]]:
    """Confidence-filter AU frames and reduce them to eyebrow movement spans.

    Low-confidence frames are dropped; the survivors are grouped per AU into
    maximal runs unbroken by a dropped frame, and runs whose mean intensity
    falls below mean_min are discarded. AU1/AU2 spans are upward movements,
    AU4 spans downward. Returned spans are (start_ms, end_ms, direction).
    """
    out = []
    for au in ("AU1", "AU2", "AU4"):
        direction = BrowDirection.Down if au == "AU4" else BrowDirection.Up
        seq = [f for f in frames if f.au_id == au]
        block: list[AuFrame] = []

        def flush(block):
            if block and float(np.mean([f.value for f in block])) >= mean_min:
                out.append((block[0].timestamp_ms,
                            block[-1].timestamp_ms + frame_ms, direction))

        for f in seq:
            if f.confidence < conf_min:
                flush(block)
                block = []
                continue
            if block and f.timestamp_ms - block[-1].timestamp_ms > frame_ms:
                flush(block)
                block = []
            block.append(f)
        flush(block)
    out.sort(key=lambda b: (b[0], b[1]))
    return out


def merge_eyebrow_beats(labels: np.ndarray, brows, mode: EyebrowMode) -> np.ndarray:
    """Relabel NoGesture frames covered by eyebrow intervals as Beat.

    Never overwrites hand-gesture or Suffix frames; HandOnly is the identity.
    """
    if mode == EyebrowMode.HandOnly:
        return labels.copy()
    wanted = {BrowDirection.Up}
    if mode == EyebrowMode.WithUpDown:
        wanted.add(BrowDirection.Down)
    out = labels.copy()
    for iv in brows:
        if iv.direction not in wanted:
            continue
        lo = max(0, iv.start)
        hi = min(len(out), iv.end)
        if lo >= hi:
            continue
        seg = out[lo:hi]
        seg[seg == GestureClass.NoGesture] = GestureClass.Beat
    return out


def pad_sample(utt: Utterance, l: int) -> Utterance:
    """Pad one utterance to l frames: zero feature rows, Suffix labels."""
    n = len(utt.labels)
    if n > l:
        raise ConfigError(f"utterance has {n} frames, longer than padded length {l}")
    if n == l:
        return utt
    labels = np.concatenate(
        [utt.labels, np.full(l - n, GestureClass.Suffix, dtype=np.int8)])
    features = np.vstack([utt.features, np.zeros((l - n, N_RAW_FEATURES))])
    return replace(utt, labels=labels, features=features, n_frames=utt.n_frames)


def pad_dataset(ds: Dataset, l: int | None = None) -> Dataset:
    """Pad every sample to a common length (the dataset maximum by default)."""
    if not ds.samples:
        raise ConfigError("cannot pad an empty dataset")
    if l is None:
        l = max(len(u.labels) for u in ds.samples)
    return Dataset(samples=[pad_sample(u, l) for u in ds.samples],
                   frame_ms=ds.frame_ms, padded_len=l)


def class_distribution(ds: Dataset) -> DistributionStats:
    """Exact per-class frame counts and proportions over a padded dataset."""
    if ds.padded_len is None:
        raise ConfigError("class_distribution requires a padded dataset")
    counts = np.zeros(N_CLASSES, dtype=np.int64)
    for u in ds.samples:
        counts += np.bincount(u.labels, minlength=N_CLASSES)
    n, l = len(ds.samples), ds.padded_len
    return DistributionStats(n=n, l=l, counts=counts,
                             proportions=counts / float(n * l))


def label_distribution(labels: list[np.ndarray]) -> DistributionStats:
    """DistributionStats straight from a list of equal-length label arrays."""
    if not labels:
        raise ConfigError("empty label list")
    l = len(labels[0])
    counts = np.zeros(N_CLASSES, dtype=np.int64)
    for y in labels:
        if len(y) != l:
            raise ConfigError("label sequences have unequal lengths")
        counts += np.bincount(y, minlength=N_CLASSES)
    return DistributionStats(n=len(labels), l=l, counts=counts,
                             proportions=counts / float(len(labels) * l))


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_random(ds: Dataset, seed: int,
                 fractions: tuple[float, float, float] = (0.64, 0.16, 0.20)
                 ) -> tuple[Dataset, Dataset, Dataset]:
    """Seed-deterministic train/val/test partition mixing all recordings."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions {fractions} do not sum to 1")
    n = len(ds.samples)
    if n < 3:
        raise ConfigError(f"need at least 3 samples to split, got {n}")
    n_val = _round_half_up(n * fractions[1])
    n_test = _round_half_up(n * fractions[2])
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise ConfigError(f"split of {n} samples leaves an empty part")
    order = np.random.default_rng(seed).permutation(n)

    def take(idx):
        return Dataset(samples=[ds.samples[i] for i in idx],
                       frame_ms=ds.frame_ms, padded_len=ds.padded_len)

    return (take(order[:n_train]),
            take(order[n_train:n_train + n_val]),
            take(order[n_train + n_val:]))


def split_by_speaker(ds: Dataset, train_speaker: str, seed: int
                     ) -> tuple[Dataset, Dataset, Dataset]:
    """Cross-speaker split: 80/20 of one speaker, all of the other as test."""
    speakers = ds.speakers
    if len(speakers) != 2:
        raise ConfigError(f"cross-speaker split needs exactly 2 speakers, "
                          f"found {speakers}")
    if train_speaker not in speakers:
        raise ConfigError(f"unknown speaker {train_speaker!r}")
    mine = [u for u in ds.samples if u.speaker == train_speaker]
    other = [u for u in ds.samples if u.speaker != train_speaker]
    n_train = _round_half_up(0.8 * len(mine))
    order = np.random.default_rng(seed).permutation(len(mine))

    def wrap(samples):
        return Dataset(samples=samples, frame_ms=ds.frame_ms,
                       padded_len=ds.padded_len)

    return (wrap([mine[i] for i in order[:n_train]]),
            wrap([mine[i] for i in order[n_train:]]),
            wrap(other))


def apply_eyebrow_mode(ds: Dataset, mode: EyebrowMode) -> Dataset:
    """Dataset-wide merge_eyebrow_beats using each utterance's own intervals."""
    samples = [replace(u, labels=merge_eyebrow_beats(u.labels, u.brows, mode))
               for u in ds.samples]
    return Dataset(samples=samples, frame_ms=ds.frame_ms, padded_len=ds.padded_len)
