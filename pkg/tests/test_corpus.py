import numpy as np
import pytest

from gesturetime.corpus import (AuFrame, BrowDirection, BrowInterval, Dataset,
                                EyebrowMode, GestureAnnotation, GestureClass,
                                GesturePhase, GestureType, Utterance,
                                WordToken, class_distribution,
                                derive_class_track, filter_au_blocks,
                                merge_eyebrow_beats, pad_dataset, pad_sample,
                                segment_ipus, split_by_speaker, split_random)
from gesturetime.errors import ConfigError, InputFormatError

NG = GestureClass.NoGesture
B = GestureClass.Beat
IO = GestureClass.IdeationalOther
IS = GestureClass.IdeationalStroke
SUF = GestureClass.Suffix


def words(*spans):
    return [WordToken(text=f"w{i}", start_ms=s, end_ms=e)
            for i, (s, e) in enumerate(spans)]


def make_utt(labels, speaker="A", recording="r0", brows=()):
    labels = np.array(labels, dtype=np.int8)
    return Utterance(speaker=speaker, recording=recording, start_ms=0,
                     end_ms=len(labels) * 100, labels=labels,
                     features=np.ones((len(labels), 16)), brows=tuple(brows))


class TestSegmentIpus:
    def test_gap_below_threshold_merges(self):
        assert segment_ipus(words((0, 300), (450, 700))) == [(0, 700)]

    def test_gap_at_threshold_splits(self):
        # 200 ms of silence is "at least 200 ms": boundary is inclusive
        assert segment_ipus(words((0, 300), (500, 700))) == [(0, 300), (500, 700)]

    def test_empty(self):
        assert segment_ipus([]) == []

    def test_overlap_rejected(self):
        with pytest.raises(InputFormatError):
            segment_ipus(words((0, 300), (250, 400)))

    def test_spans_disjoint_and_words_preserved(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            toks = []
            t = 0
            for i in range(rng.integers(1, 12)):
                t += int(rng.integers(0, 500))
                dur = int(rng.integers(50, 600))
                toks.append(WordToken(text=f"w{i}", start_ms=t, end_ms=t + dur))
                t += dur
            spans = segment_ipus(toks)
            for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
                assert e1 < s2
            covered = [w for w in toks
                       if any(s <= w.start_ms and w.end_ms <= e for s, e in spans)]
            assert covered == toks


class TestDeriveClassTrack:
    def test_no_annotations(self):
        track = derive_class_track([], (0, 500))
        assert list(track) == [NG] * 5

    def test_iconic_stroke(self):
        anns = [GestureAnnotation(GesturePhase.Stroke, GestureType.Iconic,
                                  True, 100, 300)]
        track = derive_class_track(anns, (0, 400))
        assert list(track) == [NG, IS, IS, NG]

    def test_beat_loses_to_stroke(self):
        anns = [GestureAnnotation(GesturePhase.Stroke, GestureType.Iconic,
                                  True, 0, 100),
                GestureAnnotation(GesturePhase.Stroke, GestureType.Beat,
                                  True, 0, 100)]
        track = derive_class_track(anns, (0, 100))
        assert list(track) == [IS]

    def test_non_stroke_phase_is_other(self):
        anns = [GestureAnnotation(GesturePhase.Retraction, GestureType.Metaphoric,
                                  True, 0, 200)]
        assert list(derive_class_track(anns, (0, 200))) == [IO, IO]

    def test_non_communicative_ignored(self):
        anns = [GestureAnnotation(GesturePhase.Stroke, GestureType.Iconic,
                                  False, 0, 500)]
        assert list(derive_class_track(anns, (0, 500))) == [NG] * 5

    def test_never_suffix_and_order_invariant(self):
        rng = np.random.default_rng(0)
        phases = list(GesturePhase)
        gtypes = list(GestureType)
        for _ in range(30):
            anns = []
            for _ in range(rng.integers(0, 6)):
                s = int(rng.integers(0, 900))
                anns.append(GestureAnnotation(
                    phases[rng.integers(len(phases))],
                    gtypes[rng.integers(len(gtypes))],
                    bool(rng.integers(2)), s, s + int(rng.integers(50, 400))))
            track = derive_class_track(anns, (0, 1000))
            assert SUF not in track
            shuffled = [anns[i] for i in rng.permutation(len(anns))]
            assert np.array_equal(track, derive_class_track(shuffled, (0, 1000)))


def au(au_id, ts, value, conf=0.9):
    return AuFrame(au_id=au_id, value=value, confidence=conf, timestamp_ms=ts)


class TestFilterAuBlocks:
    def test_low_confidence_dropped(self):
        frames = [au("AU1", t, 2.0, conf=0.80) for t in (0, 100, 200)]
        assert filter_au_blocks(frames) == []

    def test_low_mean_eliminated(self):
        frames = [au("AU2", 0, 0.8), au("AU2", 100, 0.9), au("AU2", 200, 1.0)]
        assert filter_au_blocks(frames) == []

    def test_au4_maps_down(self):
        frames = [au("AU4", 0, 1.2), au("AU4", 100, 1.4)]
        assert filter_au_blocks(frames) == [(0, 200, BrowDirection.Down)]

    def test_low_conf_frame_splits_block(self):
        frames = [au("AU1", 0, 1.5), au("AU1", 100, 1.5, conf=0.5),
                  au("AU1", 200, 1.5)]
        spans = filter_au_blocks(frames)
        assert spans == [(0, 100, BrowDirection.Up), (200, 300, BrowDirection.Up)]

    def test_time_gap_splits_block(self):
        frames = [au("AU1", 0, 1.5), au("AU1", 500, 1.5)]
        assert len(filter_au_blocks(frames)) == 2


class TestMergeEyebrowBeats:
    def test_hand_only_identity(self):
        labels = np.array([NG, B, IS, IO], dtype=np.int8)
        brows = [BrowInterval(0, 4, BrowDirection.Up)]
        out = merge_eyebrow_beats(labels, brows, EyebrowMode.HandOnly)
        assert np.array_equal(out, labels)

    def test_upward_relabels_nogesture(self):
        labels = np.array([NG, NG, NG, NG], dtype=np.int8)
        brows = [BrowInterval(1, 3, BrowDirection.Up)]
        out = merge_eyebrow_beats(labels, brows, EyebrowMode.WithUpward)
        assert list(out) == [NG, B, B, NG]

    def test_never_overwrites_hand_labels(self):
        labels = np.array([IS, IS, IS], dtype=np.int8)
        brows = [BrowInterval(0, 3, BrowDirection.Up)]
        out = merge_eyebrow_beats(labels, brows, EyebrowMode.WithUpward)
        assert np.array_equal(out, labels)

    def test_down_only_in_updown_mode(self):
        labels = np.array([NG, NG], dtype=np.int8)
        brows = [BrowInterval(0, 2, BrowDirection.Down)]
        up = merge_eyebrow_beats(labels, brows, EyebrowMode.WithUpward)
        updown = merge_eyebrow_beats(labels, brows, EyebrowMode.WithUpDown)
        assert list(up) == [NG, NG]
        assert list(updown) == [B, B]

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            labels = rng.integers(0, 4, size=12).astype(np.int8)
            brows = [BrowInterval(int(rng.integers(0, 10)),
                                  int(rng.integers(2, 13)),
                                  BrowDirection.Up if rng.integers(2) else
                                  BrowDirection.Down)]
            once = merge_eyebrow_beats(labels, brows, EyebrowMode.WithUpDown)
            twice = merge_eyebrow_beats(once, brows, EyebrowMode.WithUpDown)
            assert np.array_equal(once, twice)
            changed = once != labels
            assert np.all(labels[changed] == NG)


class TestPadSample:
    def test_pads_with_suffix_and_zero_rows(self):
        utt = make_utt([NG, B, IS])
        padded = pad_sample(utt, 5)
        assert list(padded.labels) == [NG, B, IS, SUF, SUF]
        assert np.all(padded.features[3:] == 0.0)
        assert padded.n_frames == 3

    def test_already_padded_unchanged(self):
        utt = make_utt([NG, B])
        assert pad_sample(utt, 2) is utt

    def test_too_long_rejected(self):
        with pytest.raises(ConfigError):
            pad_sample(make_utt([NG, B, IS]), 2)

    def test_truncate_is_inverse(self):
        utt = make_utt([NG, B, IS, IO])
        padded = pad_sample(utt, 9)
        assert np.array_equal(padded.labels[:4], utt.labels)
        assert np.array_equal(padded.features[:4], utt.features)


class TestClassDistribution:
    def test_reference_corpus_proportions(self):
        # counts 4161/1106/4208/2739/55616 over 798x85 frames
        counts = [4161, 1106, 4208, 2739, 55616]
        l = 85
        samples = []
        pool = []
        for cls, c in zip(GestureClass, counts):
            pool.extend([int(cls)] * c)
        pool = np.array(pool, dtype=np.int8)
        assert len(pool) == 798 * l
        for i in range(798):
            labels = pool[i * l:(i + 1) * l]
            samples.append(Utterance(speaker="A", recording="r", start_ms=0,
                                     end_ms=l * 100, labels=labels,
                                     features=np.zeros((l, 16))))
        ds = Dataset(samples=samples, padded_len=l)
        stats = class_distribution(ds)
        assert np.array_equal(stats.counts, counts)
        exact = np.array(counts) / (798 * l)
        assert np.allclose(stats.proportions, exact, atol=0, rtol=0)
        # published 4-decimal figures, except NoGesture which is misrounded
        # in the source (0.061345 prints as 0.0613, not 0.0614)
        expected = (0.0613, 0.0163, 0.0620, 0.0404, 0.8199)
        assert np.allclose(stats.proportions, expected, atol=5e-5)

    def test_single_class(self):
        ds = pad_dataset(Dataset(samples=[make_utt([NG, NG, NG])]))
        stats = class_distribution(ds)
        assert stats.proportion(NG) == 1.0

    def test_two_equal_samples(self):
        ds = Dataset(samples=[make_utt([B, B]), make_utt([SUF, SUF])],
                     padded_len=2)
        stats = class_distribution(ds)
        assert stats.proportion(B) == 0.5
        assert stats.proportion(SUF) == 0.5

    def test_sums_and_permutation_invariance(self):
        rng = np.random.default_rng(9)
        samples = [make_utt(rng.integers(0, 5, size=7)) for _ in range(12)]
        ds = Dataset(samples=samples, padded_len=7)
        stats = class_distribution(ds)
        assert stats.counts.sum() == 12 * 7
        assert abs(stats.proportions.sum() - 1.0) < 1e-9
        shuffled = Dataset(samples=[samples[i] for i in rng.permutation(12)],
                           padded_len=7)
        assert np.array_equal(class_distribution(shuffled).counts, stats.counts)


class TestSplits:
    def _dataset(self, n, speakers=("A",)):
        samples = [make_utt([NG, B], speaker=speakers[i % len(speakers)],
                            recording=f"r{i}") for i in range(n)]
        return Dataset(samples=samples, padded_len=2)

    def test_100_samples(self):
        tr, va, te = split_random(self._dataset(100), seed=1)
        assert (len(tr), len(va), len(te)) == (64, 16, 20)

    def test_deterministic(self):
        ds = self._dataset(30)
        a = split_random(ds, seed=7)
        b = split_random(ds, seed=7)
        for pa, pb in zip(a, b):
            assert [u.recording for u in pa.samples] == \
                   [u.recording for u in pb.samples]

    def test_remainder_to_train(self):
        tr, va, te = split_random(self._dataset(10), seed=1)
        assert (len(tr), len(va), len(te)) == (6, 2, 2)

    def test_partition(self):
        ds = self._dataset(25)
        tr, va, te = split_random(ds, seed=3)
        names = sorted(u.recording for part in (tr, va, te)
                       for u in part.samples)
        assert names == sorted(u.recording for u in ds.samples)

    def test_too_small(self):
        with pytest.raises(ConfigError):
            split_random(self._dataset(2), seed=0)

    def test_by_speaker(self):
        samples = ([make_utt([NG], speaker="A", recording=f"a{i}")
                    for i in range(50)]
                   + [make_utt([NG], speaker="B", recording=f"b{i}")
                      for i in range(40)])
        ds = Dataset(samples=samples, padded_len=1)
        tr, va, te = split_by_speaker(ds, "A", seed=0)
        assert (len(tr), len(va), len(te)) == (40, 10, 40)
        tr, va, te = split_by_speaker(ds, "B", seed=0)
        assert (len(tr), len(va), len(te)) == (32, 8, 50)

    def test_by_speaker_needs_two(self):
        with pytest.raises(ConfigError):
            split_by_speaker(self._dataset(5), "A", seed=0)
