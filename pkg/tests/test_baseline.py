import numpy as np
import pytest

from gesturetime.baseline import (ClassChain, estimate_chain, load_chain,
                                  run_baseline, sample_sequence, save_chain)
from gesturetime.corpus import GestureClass, N_CLASSES
from gesturetime.errors import ConfigError
from gesturetime.seqmetric import MetricConfig, mean_scores, score

NG = GestureClass.NoGesture
B = GestureClass.Beat
SUF = GestureClass.Suffix


def degenerate_chain(cls=NG):
    initial = np.zeros(N_CLASSES)
    initial[cls] = 1.0
    transition = np.zeros((N_CLASSES, N_CLASSES))
    transition[:, cls] = 1.0
    return ClassChain(initial=initial, transition=transition)


class TestEstimateChain:
    def test_initial_all_nogesture(self):
        seqs = [np.array([NG, B, B], dtype=np.int8) for _ in range(4)]
        chain = estimate_chain(seqs)
        assert list(chain.initial) == [1, 0, 0, 0, 0]

    def test_single_sequence_transitions(self):
        chain = estimate_chain([np.array([NG, NG, B], dtype=np.int8)])
        assert chain.transition[NG, NG] == pytest.approx(0.5)
        assert chain.transition[NG, B] == pytest.approx(0.5)

    def test_suffix_self_loop_in_padded_data(self):
        chain = estimate_chain([np.array([NG, B, SUF, SUF, SUF], dtype=np.int8)])
        expect = np.zeros(N_CLASSES)
        expect[SUF] = 1.0
        assert np.array_equal(chain.transition[SUF], expect)

    def test_unseen_state_self_loop(self):
        chain = estimate_chain([np.array([NG, NG], dtype=np.int8)])
        assert chain.transition[B, B] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            estimate_chain([])

    def test_rows_stochastic(self):
        rng = np.random.default_rng(0)
        seqs = [rng.integers(0, 5, size=20).astype(np.int8) for _ in range(6)]
        chain = estimate_chain(seqs)
        assert np.allclose(chain.transition.sum(axis=1), 1.0)
        assert chain.initial.sum() == pytest.approx(1.0)


class TestSampleSequence:
    def test_degenerate(self):
        out = sample_sequence(degenerate_chain(), 10, seed=3)
        assert np.all(out == NG)

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        seqs = [rng.integers(0, 5, size=15).astype(np.int8) for _ in range(5)]
        chain = estimate_chain(seqs)
        a = sample_sequence(chain, 30, seed=9)
        b = sample_sequence(chain, 30, seed=9)
        assert np.array_equal(a, b)

    def test_transition_frequencies_converge(self):
        rng = np.random.default_rng(2)
        seqs = [rng.integers(0, 3, size=40).astype(np.int8) for _ in range(20)]
        chain = estimate_chain(seqs)
        out = sample_sequence(chain, 100_000, seed=0)
        counts = np.zeros((N_CLASSES, N_CLASSES))
        np.add.at(counts, (out[:-1].astype(int), out[1:].astype(int)), 1)
        totals = counts.sum(axis=1, keepdims=True)
        for c in range(N_CLASSES):
            if totals[c] == 0:
                continue
            emp = counts[c] / totals[c]
            assert np.max(np.abs(emp - chain.transition[c])) < 0.02


class TestRunBaseline:
    def _setup(self):
        rng = np.random.default_rng(4)
        train = [rng.integers(0, 4, size=16).astype(np.int8) for _ in range(10)]
        truth = [rng.integers(0, 4, size=16).astype(np.int8) for _ in range(5)]
        return estimate_chain(train), truth

    def test_one_repetition_is_single_score(self):
        chain, truth = self._setup()
        mean, reports = run_baseline(chain, truth, repetitions=1, seed=7)
        assert len(reports) == 1
        for cls in mean.classes:
            if mean[cls].defined:
                assert mean[cls].alignment == reports[0][cls].alignment

    def test_mean_of_two_reports(self):
        chain, truth = self._setup()
        mean, reports = run_baseline(chain, truth, repetitions=2, seed=7)
        recomputed = mean_scores(reports)
        for cls in mean.classes:
            if mean[cls].defined:
                assert mean[cls].alignment == pytest.approx(
                    recomputed[cls].alignment)
                assert mean[cls].alignment == pytest.approx(
                    (reports[0][cls].alignment + reports[1][cls].alignment) / 2)

    def test_mean_bounded_by_max(self):
        chain, truth = self._setup()
        mean, reports = run_baseline(chain, truth, repetitions=8, seed=1)
        for cls in mean.classes:
            if mean[cls].defined:
                assert mean[cls].alignment <= max(
                    r[cls].alignment for r in reports) + 1e-12

    def test_bad_repetitions(self):
        chain, truth = self._setup()
        with pytest.raises(ConfigError):
            run_baseline(chain, truth, repetitions=0)

    def test_deterministic(self):
        chain, truth = self._setup()
        m1, _ = run_baseline(chain, truth, repetitions=3, seed=5)
        m2, _ = run_baseline(chain, truth, repetitions=3, seed=5)
        for cls in m1.classes:
            if m1[cls].defined:
                assert m1[cls].alignment == m2[cls].alignment


class TestChainIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        seqs = [rng.integers(0, 5, size=25).astype(np.int8) for _ in range(8)]
        chain = estimate_chain(seqs)
        path = tmp_path / "chain.txt"
        save_chain(path, chain)
        loaded = load_chain(path)
        assert np.allclose(loaded.initial, chain.initial, atol=1e-11)
        assert np.allclose(loaded.transition, chain.transition, atol=1e-11)

    def test_invalid_chain_rejected(self):
        with pytest.raises(ConfigError):
            ClassChain(initial=np.full(N_CLASSES, 0.3),
                       transition=np.eye(N_CLASSES))
