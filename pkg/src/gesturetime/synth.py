"""Synthetic corpus generator.

The real annotated conversation corpus is not distributable, so tests and
demo runs use a generated stand-in. Class tracks follow a sticky first-order
chain over the four real classes; acoustic frames are synthesized so that the
task is learnable from prosody alone: F0 rises ahead of and during
IdeationalStroke blocks, intensity pulses mark Beat frames, and NoGesture
frames are flat. Word tokens, gesture annotations and AU frames are emitted
consistently with the label tracks, so the ingest pipeline reproduces the
generated dataset exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import (AuFrame, BrowDirection, BrowInterval, Dataset,
                     GestureAnnotation, GestureClass, GesturePhase,
                     GestureType, Utterance, WordToken, derive_class_track,
                     filter_au_blocks, segment_ipus)

# silence between consecutive utterances on one channel, ms
_INTER_UTT_GAP_MS = 300

# class-conditioned prosody means: f0 Hz, f0 direction score, intensity
_PROSODY_MEANS = {
    GestureClass.NoGesture: (120.0, 0.0, 60.0),
    GestureClass.Beat: (122.0, 0.2, 74.0),
    GestureClass.IdeationalOther: (138.0, 0.6, 66.0),
    GestureClass.IdeationalStroke: (165.0, 1.6, 68.0),
}
_PROSODY_NOISE = (2.0, 0.15, 1.5)
_SILENCE_PROSODY = (0.0, 0.0, 40.0)
_PRE_STROKE_RISE_F0 = (15.0, 30.0)   # ramp on the two frames before a stroke
_PRE_STROKE_RISE_DIR = 0.8
_MFCC_NOISE = 0.3


@dataclass(frozen=True)
class SynthConfig:
    """Script probabilities driving the synthetic class tracks."""
    transition: np.ndarray = field(default_factory=lambda: np.array([
        # NoG   Beat  Other Stroke
        [0.78, 0.08, 0.14, 0.00],   # NoGesture
        [0.35, 0.60, 0.05, 0.00],   # Beat
        [0.05, 0.00, 0.70, 0.25],   # IdeationalOther
        [0.15, 0.00, 0.15, 0.70],   # IdeationalStroke
    ]))
    min_len_frames: int = 8
    brow_up_prob: float = 0.30
    brow_down_prob: float = 0.15
    samples_per_recording: int = 40

    def expected_proportions(self) -> np.ndarray:
        """Stationary distribution of the class chain (4 real classes)."""
        vals, vecs = np.linalg.eig(self.transition.T)
        k = int(np.argmin(np.abs(vals - 1.0)))
        pi = np.real(vecs[:, k])
        return pi / pi.sum()


def _mfcc_embeddings() -> np.ndarray:
    # fixed per-class MFCC signatures, independent of the corpus seed
    rng = np.random.default_rng(0xC0FFEE)
    return rng.normal(0.0, 1.0, size=(4, 13))


def _sample_track(rng, cfg: SynthConfig, n_frames: int) -> np.ndarray:
    pi = cfg.expected_proportions()
    track = np.empty(n_frames, dtype=np.int8)
    track[0] = rng.choice(4, p=pi)
    for t in range(1, n_frames):
        track[t] = rng.choice(4, p=cfg.transition[track[t - 1]])
    return track


def _label_blocks(labels: np.ndarray):
    """(cls, start, end) runs of one unpadded track."""
    blocks = []
    start = 0
    for t in range(1, len(labels) + 1):
        if t == len(labels) or labels[t] != labels[start]:
            blocks.append((GestureClass(int(labels[start])), start, t))
            start = t
    return blocks


def _synth_features(rng, labels: np.ndarray, mfcc_emb: np.ndarray) -> np.ndarray:
    n = len(labels)
    feats = np.zeros((n, 16))
    for t in range(n):
        cls = GestureClass(int(labels[t]))
        f0, f0dir, inten = _PROSODY_MEANS[cls]
        feats[t, 0] = f0
        feats[t, 1] = f0dir
        feats[t, 2] = inten
        feats[t, 3:] = mfcc_emb[int(cls)]
    # F0 rise leading into each stroke block
    for cls, start, end in _label_blocks(labels):
        if cls != GestureClass.IdeationalStroke:
            continue
        for k, bump in enumerate(reversed(_PRE_STROKE_RISE_F0)):
            pos = start - 1 - k
            if pos >= 0 and labels[pos] != GestureClass.IdeationalStroke:
                feats[pos, 0] += bump
                feats[pos, 1] += _PRE_STROKE_RISE_DIR
    feats[:, 0] += rng.normal(0, _PROSODY_NOISE[0], n)
    feats[:, 1] += rng.normal(0, _PROSODY_NOISE[1], n)
    feats[:, 2] += rng.normal(0, _PROSODY_NOISE[2], n)
    feats[:, 3:] += rng.normal(0, _MFCC_NOISE, (n, 13))
    return feats


def _synth_words(rng, start_ms: int, end_ms: int) -> list[WordToken]:
    """Cover [start_ms, end_ms] with word tokens separated by < 200 ms gaps."""
    words = []
    n_words = max(1, (end_ms - start_ms) // 400)
    bounds = np.linspace(start_ms, end_ms, n_words + 1).astype(int)
    for i in range(n_words):
        b0, b1 = int(bounds[i]), int(bounds[i + 1])
        gap = int(rng.integers(0, min(100, max(1, b1 - b0 - 100)))) if i < n_words - 1 else 0
        words.append(WordToken(text=f"w{i}", start_ms=b0, end_ms=b1 - gap))
    return words


def _annotations_from_track(labels: np.ndarray, start_ms: int, frame_ms: int
                            ) -> list[GestureAnnotation]:
    anns = []
    for cls, s, e in _label_blocks(labels):
        span = (start_ms + s * frame_ms, start_ms + e * frame_ms)
        if cls == GestureClass.Beat:
            anns.append(GestureAnnotation(GesturePhase.Stroke, GestureType.Beat,
                                          True, *span))
        elif cls == GestureClass.IdeationalStroke:
            anns.append(GestureAnnotation(GesturePhase.Stroke, GestureType.Iconic,
                                          True, *span))
        elif cls == GestureClass.IdeationalOther:
            anns.append(GestureAnnotation(GesturePhase.Preparation,
                                          GestureType.Iconic, True, *span))
    return anns


@dataclass
class Channel:
    """One (recording, speaker) stream in interchange terms."""
    recording: str
    speaker: str
    words: list = field(default_factory=list)
    gestures: list = field(default_factory=list)
    au_frames: list = field(default_factory=list)
    feature_rows: list = field(default_factory=list)  # (timestamp_ms, 16 floats)


@dataclass
class SynthCorpus:
    dataset: Dataset
    channels: list[Channel]
    config: SynthConfig


def generate_synthetic_raw(seed: int, n_samples: int, max_len_frames: int,
                           config: SynthConfig | None = None,
                           frame_ms: int = 100) -> SynthCorpus:
    cfg = config or SynthConfig()
    if max_len_frames < cfg.min_len_frames:
        cfg = SynthConfig(transition=cfg.transition, min_len_frames=max_len_frames,
                          brow_up_prob=cfg.brow_up_prob,
                          brow_down_prob=cfg.brow_down_prob,
                          samples_per_recording=cfg.samples_per_recording)
    rng = np.random.default_rng(seed)
    mfcc_emb = _mfcc_embeddings()

    channels: dict[tuple[str, str], Channel] = {}
    cursor: dict[tuple[str, str], int] = {}
    samples = []
    for i in range(n_samples):
        recording = f"rec{i // cfg.samples_per_recording:03d}"
        speaker = "A" if i % 2 == 0 else "B"
        key = (recording, speaker)
        ch = channels.setdefault(key, Channel(recording=recording, speaker=speaker))

        n_frames = int(rng.integers(cfg.min_len_frames, max_len_frames + 1))
        start_ms = cursor.get(key, 0)
        end_ms = start_ms + n_frames * frame_ms
        cursor[key] = end_ms + _INTER_UTT_GAP_MS

        labels = _sample_track(rng, cfg, n_frames)
        feats = _synth_features(rng, labels, mfcc_emb)
        ch.words.extend(_synth_words(rng, start_ms, end_ms))
        ch.gestures.extend(_annotations_from_track(labels, start_ms, frame_ms))
        for t in range(n_frames):
            ch.feature_rows.append((start_ms + t * frame_ms, feats[t].copy()))

        # eyebrow events over NoGesture runs; AU frames carry them
        brows = []
        for cls, s, e in _label_blocks(labels):
            if cls != GestureClass.NoGesture or e - s < 3:
                continue
            roll = rng.random()
            if roll < cfg.brow_up_prob:
                au, direction = ("AU1", BrowDirection.Up)
            elif roll < cfg.brow_up_prob + cfg.brow_down_prob:
                au, direction = ("AU4", BrowDirection.Down)
            else:
                continue
            b0, b1 = s + 1, min(e, s + 3)
            for t in range(b0, b1):
                ch.au_frames.append(AuFrame(
                    au_id=au, value=float(rng.uniform(1.2, 1.8)),
                    confidence=float(rng.uniform(0.9, 1.0)),
                    timestamp_ms=start_ms + t * frame_ms))
            brows.append(BrowInterval(start=b0, end=b1, direction=direction))
        # low-confidence AU noise in the trailing silence; filtered on ingest
        if rng.random() < 0.4:
            ch.au_frames.append(AuFrame(au_id="AU2", value=2.0, confidence=0.5,
                                        timestamp_ms=end_ms + 100))

        samples.append(Utterance(speaker=speaker, recording=recording,
                                 start_ms=start_ms, end_ms=end_ms,
                                 labels=labels, features=feats,
                                 brows=tuple(brows)))

    for ch in channels.values():
        ch.au_frames.sort(key=lambda f: (f.au_id, f.timestamp_ms))
    dataset = Dataset(samples=samples, frame_ms=frame_ms)
    return SynthCorpus(dataset=dataset, channels=sorted(
        channels.values(), key=lambda c: (c.recording, c.speaker)), config=cfg)


def generate_synthetic_corpus(seed: int, n_samples: int, max_len_frames: int,
                              config: SynthConfig | None = None) -> Dataset:
    """Deterministic solvable corpus; see module docstring for the layout."""
    return generate_synthetic_raw(seed, n_samples, max_len_frames, config).dataset


def check_consistency(corpus: SynthCorpus) -> None:
    """Assert that re-deriving labels from the emitted annotations agrees.

    Used by tests; raises AssertionError on mismatch.
    """
    by_channel = {(c.recording, c.speaker): c for c in corpus.channels}
    for u in corpus.dataset.samples:
        ch = by_channel[(u.recording, u.speaker)]
        rederived = derive_class_track(
            ch.gestures, (u.start_ms, u.end_ms), corpus.dataset.frame_ms)
        assert np.array_equal(rederived, u.labels), (u.recording, u.speaker,
                                                     u.start_ms)
        spans = segment_ipus(sorted(ch.words, key=lambda w: w.start_ms))
        assert (u.start_ms, u.end_ms) in spans
