import csv

import numpy as np
import pytest

from _oracles import brute_force_match
from gesturetime.corpus import GestureClass
from gesturetime.errors import ConfigError
from gesturetime.seqmetric import (Block, MetricConfig, block_distance,
                                   match_blocks, match_sequences, score,
                                   to_blocks, write_eval_report)
from gesturetime.seqmetric._match_py import match_monotone
from gesturetime.seqmetric import backend

NG = GestureClass.NoGesture
B = GestureClass.Beat
IO = GestureClass.IdeationalOther
IS = GestureClass.IdeationalStroke
SUF = GestureClass.Suffix


def seq(*labels):
    return np.array(labels, dtype=np.int8)


class TestToBlocks:
    def test_two_runs(self):
        blocks = to_blocks(seq(NG, NG, B))
        assert blocks == [Block(NG, 0, 2), Block(B, 2, 3)]

    def test_empty(self):
        assert to_blocks(seq()) == []

    def test_alternating(self):
        assert len(to_blocks(seq(NG, B, NG))) == 3

    def test_round_trip(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            labels = rng.integers(0, 5, size=rng.integers(1, 30)).astype(np.int8)
            blocks = to_blocks(labels)
            rebuilt = np.concatenate(
                [np.full(b.end - b.start, b.cls, dtype=np.int8) for b in blocks])
            assert np.array_equal(rebuilt, labels)
            for a, b in zip(blocks, blocks[1:]):
                assert a.end == b.start and a.cls != b.cls


class TestBlockDistance:
    def test_identical(self):
        assert block_distance(Block(B, 3, 5), Block(B, 3, 5)) == 0

    def test_one_early_one_late(self):
        # predicted block starts 100 ms earlier and runs 200 ms longer
        assert block_distance(Block(IS, 2, 7), Block(IS, 3, 6)) == 2

    def test_start2_end1(self):
        assert block_distance(Block(B, 0, 5), Block(B, 2, 4)) == 3


class TestMatchBlocks:
    def test_identity(self):
        labels = seq(NG, NG, B, IS, IS, NG)
        m = match_sequences(labels, labels, MetricConfig())
        for cls in (NG, B, IS):
            assert m.inserted_mass(cls) == 0 and m.deleted_mass(cls) == 0
            assert m.aligned_mass(cls) == 2 * int(np.sum(labels == cls))

    def test_insertion_and_deletion(self):
        # prediction misses an IdeationalOther block and invents a
        # NoGesture block far from anything in the truth
        truth = seq(IS, IS, IO, IO, IS, IS, IS, IS, IS, IS)
        pred = seq(IS, IS, IS, IS, IS, IS, NG, NG, IS, IS)
        m = match_sequences(pred, truth, MetricConfig())
        assert [m.truth_blocks[j].cls for j in m.per_class[IO].deletions] == [IO]
        assert [m.pred_blocks[i].cls for i in m.per_class[NG].insertions] == [NG]
        assert m.per_class[IO].pairs == [] and m.per_class[NG].pairs == []

    def test_unequal_length_rejected(self):
        with pytest.raises(ConfigError):
            match_sequences(seq(NG, NG), seq(NG), MetricConfig())

    def test_suffix_excluded_by_default(self):
        pred = seq(NG, SUF, SUF)
        truth = seq(NG, SUF, SUF)
        m = match_sequences(pred, truth, MetricConfig())
        assert SUF not in m.per_class
        m2 = match_sequences(pred, truth, MetricConfig(include_suffix=True))
        assert m2.aligned_mass(SUF) == 4

    def test_agrees_with_brute_force(self):
        rng = np.random.default_rng(99)
        cfg = MetricConfig(threshold=2)
        for _ in range(300):
            l = int(rng.integers(4, 15))
            pred = rng.integers(0, 3, size=l).astype(np.int8)
            truth = rng.integers(0, 3, size=l).astype(np.int8)
            m = match_blocks(to_blocks(pred), to_blocks(truth), cfg)
            for cls, cm in m.per_class.items():
                p_idx = [i for i, b in enumerate(m.pred_blocks) if b.cls == cls]
                t_idx = [j for j, b in enumerate(m.truth_blocks) if b.cls == cls]
                pb = [(m.pred_blocks[i].start, m.pred_blocks[i].end) for i in p_idx]
                tb = [(m.truth_blocks[j].start, m.truth_blocks[j].end) for j in t_idx]
                expect = [(p_idx[p], t_idx[t])
                          for p, t in brute_force_match(pb, tb, cfg.threshold)]
                assert cm.pairs == expect, (pred, truth, cls)

    def test_symmetry_swaps_insertions_and_deletions(self):
        rng = np.random.default_rng(5)
        cfg = MetricConfig()
        for _ in range(100):
            l = int(rng.integers(3, 20))
            a = rng.integers(0, 4, size=l).astype(np.int8)
            b = rng.integers(0, 4, size=l).astype(np.int8)
            m1 = match_sequences(a, b, cfg)
            m2 = match_sequences(b, a, cfg)
            for cls in m1.per_class:
                assert m1.aligned_mass(cls) == m2.aligned_mass(cls)
                assert m1.inserted_mass(cls) == m2.deleted_mass(cls)
                assert m1.deleted_mass(cls) == m2.inserted_mass(cls)

    def test_tolerance_monotone(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            l = int(rng.integers(3, 20))
            a = rng.integers(0, 4, size=l).astype(np.int8)
            b = rng.integers(0, 4, size=l).astype(np.int8)
            masses = []
            for t in range(5):
                m = match_sequences(a, b, MetricConfig(threshold=t))
                masses.append(sum(m.aligned_mass(c) for c in m.per_class))
            assert masses == sorted(masses)

    def test_truth_block_matched_at_most_once(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            l = int(rng.integers(3, 20))
            a = rng.integers(0, 4, size=l).astype(np.int8)
            b = rng.integers(0, 4, size=l).astype(np.int8)
            m = match_sequences(a, b, MetricConfig())
            for cm in m.per_class.values():
                truths = [t for _, t in cm.pairs]
                preds = [p for p, _ in cm.pairs]
                assert len(set(truths)) == len(truths)
                assert len(set(preds)) == len(preds)
                assert truths == sorted(truths)
                assert preds == sorted(preds)


class TestBackends:
    def test_python_backend_against_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            m, n = rng.integers(0, 5, size=2)
            pb, tb = [], []
            pos = 0
            for _ in range(m):
                pos += int(rng.integers(0, 3))
                end = pos + int(rng.integers(1, 5))
                pb.append((pos, end))
                pos = end
            pos = 0
            for _ in range(n):
                pos += int(rng.integers(0, 3))
                end = pos + int(rng.integers(1, 5))
                tb.append((pos, end))
                pos = end
            ps = [b[0] for b in pb]
            pe = [b[1] for b in pb]
            ts = [b[0] for b in tb]
            te = [b[1] for b in tb]
            got = match_monotone(ps, pe, ts, te, 2)
            assert got == brute_force_match(pb, tb, 2)
            if backend.BACKEND != "python":
                fast = backend.match_monotone(ps, pe, ts, te, 2)
                assert fast == got

    def test_backend_reported(self):
        assert backend.BACKEND in ("python", "cython")


class TestScore:
    def test_perfect_prediction(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            pairs = []
            for _ in range(4):
                y = rng.integers(0, 5, size=12).astype(np.int8)
                pairs.append((y, y))
            scores = score(pairs, MetricConfig())
            for cls in scores.classes:
                s = scores[cls]
                if s.defined:
                    assert (s.alignment, s.insertion, s.deletion) == (1.0, 0.0, 0.0)

    def test_hand_example(self):
        truth = seq(IS, IS, NG, NG)
        pred = seq(IS, IS, IS, NG)
        scores = score([(pred, truth)], MetricConfig(threshold=2))
        assert scores[IS].alignment == pytest.approx((3 + 2) / (2 * 1 * 4 * 0.5))
        assert scores[NG].alignment == pytest.approx((1 + 2) / (2 * 1 * 4 * 0.5))
        for cls in (IS, NG):
            assert scores[cls].insertion == 0.0
            assert scores[cls].deletion == 0.0

    def test_insertion_can_exceed_one(self):
        # Beat appears twice as often in the prediction as in the truth,
        # nowhere near the single truth block
        truth = seq(B, NG, NG, NG, NG, NG, NG, NG, NG, NG, NG, NG)
        pred = seq(NG, NG, NG, NG, NG, B, NG, NG, NG, NG, B, NG)
        scores = score([(pred, truth)], MetricConfig(threshold=2))
        assert scores[B].insertion == pytest.approx(2.0)
        assert scores[B].deletion == pytest.approx(1.0)

    def test_absent_class_undefined(self):
        y = seq(NG, NG, NG)
        scores = score([(y, y)], MetricConfig())
        assert scores[B].defined is False
        assert scores[B].alignment is None

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            score([], MetricConfig())

    def test_deletion_bounded(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            pairs = [(rng.integers(0, 4, size=10).astype(np.int8),
                      rng.integers(0, 4, size=10).astype(np.int8))
                     for _ in range(3)]
            scores = score(pairs, MetricConfig())
            for cls in scores.classes:
                s = scores[cls]
                if s.defined:
                    assert 0.0 <= s.deletion <= 1.0
                    assert s.insertion >= 0.0
                    assert s.alignment >= 0.0


class TestReport:
    def test_csv_round_trip(self, tmp_path):
        truth = seq(IS, IS, NG, NG)
        pred = seq(IS, IS, IS, NG)
        scores = score([(pred, truth)], MetricConfig())
        path = tmp_path / "eval_report.csv"
        write_eval_report(path, scores)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        byname = {r["class"]: r for r in rows}
        assert set(byname) == {"NoGesture", "Beat", "IdeationalOther",
                               "IdeationalStroke"}
        assert float(byname["IdeationalStroke"]["alignment"]) == pytest.approx(1.25)
        assert byname["Beat"]["alignment"] == "NA"
        assert int(byname["NoGesture"]["t_c"]) == 2
