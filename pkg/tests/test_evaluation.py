import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.data.data_handling import ScoredTrial, TrialLabel
from src.utils.evaluation import compute_eer, roc_frame, roc_points


def _scored(targets, nontargets):
    return ([ScoredTrial('m', f"t{i}", TrialLabel.TARGET, float(s)) for i, s in enumerate(targets)]
            + [ScoredTrial('m', f"n{i}", TrialLabel.NONTARGET, float(s)) for i, s in enumerate(nontargets)])


def _brute_force_eer(targets, nontargets):
    """Sweep every distinct threshold with plain loops, interpolate at the first crossing"""
    thresholds = [float('inf')] + sorted(set(targets) | set(nontargets), reverse=True)
    points = []
    for threshold in thresholds:
        miss = sum(1 for s in targets if s < threshold) / len(targets)
        false_alarm = sum(1 for s in nontargets if s >= threshold) / len(nontargets)
        points.append((false_alarm, miss))
    for k, (false_alarm, miss) in enumerate(points):
        if miss - false_alarm <= 0:
            if miss == false_alarm:
                return false_alarm
            prev_fa, prev_miss = points[k - 1]
            d_prev, d_cur = prev_miss - prev_fa, miss - false_alarm
            return prev_fa + d_prev / (d_prev - d_cur) * (false_alarm - prev_fa)
    raise AssertionError("no crossing")


score_lists = st.lists(st.integers(-20, 20).map(lambda v: v / 4.0), min_size=1, max_size=30)


class TestComputeEer:

    def test_perfect_separation(self):
        assert compute_eer(_scored([2.0], [-2.0])).eer == 0.0

    def test_half(self):
        assert compute_eer(_scored([0.8, 0.2], [0.6, 0.1])).eer == 0.5

    def test_one_third(self):
        result = compute_eer(_scored([0.9, 0.8, 0.3], [0.7, 0.2, 0.1]))
        assert result.eer == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert result.percent == pytest.approx(33.333333, abs=1e-6)
        assert result.counts == (3, 3)
        assert result.threshold == 0.7

    def test_interpolated_crossing(self):
        """No exact crossing: interpolate between neighbouring ROC points"""
        result = compute_eer(_scored([1.0, 0.0], [0.5]))
        assert result.eer == pytest.approx(0.5, abs=1e-15)

    def test_all_tied(self):
        assert compute_eer(_scored([1.0, 1.0], [1.0])).eer == pytest.approx(0.5)

    def test_requires_both_classes(self):
        with pytest.raises(ValueError, match="nontarget"):
            compute_eer(_scored([1.0], []))
        with pytest.raises(ValueError, match="target"):
            compute_eer(_scored([], [1.0]))

    def test_unknown_label(self):
        trials = _scored([1.0], [0.0]) + [ScoredTrial('m', 'x', TrialLabel.UNKNOWN, 0.5)]
        with pytest.raises(ValueError, match="label"):
            compute_eer(trials)

    def test_oracle_random(self):
        rand_gen = np.random.RandomState(seed=0)
        for _ in range(1000):
            targets = np.round(rand_gen.randn(rand_gen.randint(1, 30)) + 1.0, 1)
            nontargets = np.round(rand_gen.randn(rand_gen.randint(1, 30)), 1)
            expected = _brute_force_eer(list(targets), list(nontargets))
            assert compute_eer(_scored(targets, nontargets)).eer == pytest.approx(expected, abs=1e-12)

    @given(score_lists, score_lists)
    def test_bounds_and_oracle(self, targets, nontargets):
        eer = compute_eer(_scored(targets, nontargets)).eer
        assert 0.0 <= eer <= 1.0
        assert eer == pytest.approx(_brute_force_eer(targets, nontargets), abs=1e-12)

    @given(score_lists, score_lists)
    def test_monotone_invariance(self, targets, nontargets):
        eer = compute_eer(_scored(targets, nontargets)).eer
        transformed = compute_eer(_scored([3.0 * s + 1.0 for s in targets],
                                          [3.0 * s + 1.0 for s in nontargets])).eer
        assert transformed == pytest.approx(eer, abs=1e-12)

    @given(score_lists, score_lists)
    def test_negate_and_swap(self, targets, nontargets):
        eer = compute_eer(_scored(targets, nontargets)).eer
        swapped = compute_eer(_scored([-s for s in nontargets], [-s for s in targets])).eer
        assert swapped == pytest.approx(eer, abs=1e-12)


class TestRoc:

    def test_points(self):
        thresholds, false_alarm, miss = roc_points(_scored([0.8, 0.2], [0.6, 0.1]))
        assert thresholds.tolist() == [np.inf, 0.8, 0.6, 0.2, 0.1]
        assert false_alarm.tolist() == [0.0, 0.0, 0.5, 0.5, 1.0]
        assert miss.tolist() == [1.0, 0.5, 0.5, 0.0, 0.0]

    def test_frame(self):
        frame = roc_frame(_scored([1.0], [0.0]))
        assert list(frame.columns) == ['threshold', 'false_alarm', 'miss']
        assert len(frame) == 3
