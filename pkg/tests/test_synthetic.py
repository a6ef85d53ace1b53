import numpy as np
import pytest
from scipy import stats

from src.data.data_handling import TrialLabel
from src.data.synthetic import SynthSpec, generate, make_trials


def _residuals(vector_set):
    labels = vector_set.class_labels()
    values = vector_set.values
    sums = np.zeros((vector_set.num_classes, vector_set.dim))
    np.add.at(sums, labels, values)
    means = sums / np.bincount(labels)[:, None]
    return values - means[labels]


class TestSynthSpec:

    @pytest.mark.parametrize('kwargs', [
        dict(num_classes=0, per_class=1, dim=1),
        dict(num_classes=2, per_class=0, dim=1),
        dict(num_classes=2, per_class=1, dim=0),
        dict(num_classes=2, per_class=1, dim=1, family='laplace'),
        dict(num_classes=2, per_class=1, dim=1, family='student_t', nu=4.0),
        dict(num_classes=2, per_class=1, dim=2, epsilon=(1.0, 2.0, 3.0)),
        dict(num_classes=2, per_class=1, dim=1, epsilon=-1.0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SynthSpec(**kwargs)

    def test_scalar_epsilon_broadcast(self):
        assert SynthSpec(2, 1, 3, 2.5).epsilon == (2.5, 2.5, 2.5)


class TestGenerate:

    def test_shape_and_ids(self):
        vector_set = generate(SynthSpec(3, 4, 2, seed=1, prefix='trn'))
        assert len(vector_set) == 12
        assert vector_set.num_classes == 3
        assert vector_set.ids[0] == 'trn00000-0000'
        assert vector_set.class_ids[-1] == 'trn00002'

    def test_deterministic(self):
        spec = SynthSpec(5, 3, 2, [1.0, 2.0], family='student_t', seed=9)
        first, second = generate(spec), generate(spec)
        assert first.ids == second.ids
        assert np.array_equal(first.values, second.values)

    def test_total_variance(self):
        """Single-sample classes with eps=4 have total variance 4 + 1"""
        vector_set = generate(SynthSpec(20000, 1, 1, 4.0, seed=3))
        assert np.var(vector_set.values) == pytest.approx(5.0, rel=0.05)

    @pytest.mark.parametrize('family', ['gaussian', 'student_t'])
    def test_residual_covariance_identity(self, family):
        vector_set = generate(SynthSpec(10000, 10, 3, [2.0, 1.0, 0.5], family=family, seed=4))
        residuals = _residuals(vector_set)
        covariance = residuals.T @ residuals / (len(residuals) - vector_set.num_classes)
        relative = np.linalg.norm(covariance - np.eye(3)) / np.linalg.norm(np.eye(3))
        assert relative < 0.05

    def test_student_t_heavy_tails(self):
        """nu=5 residuals are strongly super-Gaussian"""
        vector_set = generate(SynthSpec(1, 400000, 1, 1.0, family='student_t', nu=5.0, seed=5))
        residuals = vector_set.values[:, 0] - vector_set.values[:, 0].mean()
        assert stats.kurtosis(residuals) > 3.0
        # a unit-variance gaussian puts about 6e-5 of its mass beyond 4
        assert np.mean(np.abs(residuals) > 4.0) > 0.002

    def test_student_t_kurtosis_nu10(self):
        """nu=10 has excess kurtosis 6 / (nu - 4) = 1"""
        vector_set = generate(SynthSpec(1, 400000, 1, 1.0, family='student_t', nu=10.0, seed=6))
        assert stats.kurtosis(vector_set.values[:, 0]) == pytest.approx(1.0, abs=0.3)

    def test_gaussian_kurtosis(self):
        vector_set = generate(SynthSpec(1, 100000, 1, 1.0, seed=7))
        assert abs(stats.kurtosis(vector_set.values[:, 0])) < 0.1


class TestMakeTrials:

    def test_partition(self):
        vector_set = generate(SynthSpec(2, 3, 2, seed=1))
        enroll_map, trials, test_side = make_trials(vector_set, 1, 4, 4, seed=1)
        assert len(trials) == 8
        assert sum(t.label == TrialLabel.TARGET for t in trials) == 4
        enrolled = {uid for utts in enroll_map.models.values() for uid in utts}
        assert enrolled.isdisjoint(test_side.ids)
        assert all(t.test_id in test_side for t in trials)
        assert all(t.enroll_id in enroll_map for t in trials)

    def test_labels_match_classes(self):
        vector_set = generate(SynthSpec(6, 5, 2, seed=2))
        enroll_map, trials, test_side = make_trials(vector_set, 2, 10, 30, seed=2)
        for trial in trials:
            same = test_side.class_ids[test_side.position(trial.test_id)] == trial.enroll_id
            assert same == (trial.label == TrialLabel.TARGET)
        assert len({(t.enroll_id, t.test_id) for t in trials}) == 40

    def test_first_records_enroll(self):
        vector_set = generate(SynthSpec(2, 4, 1, seed=3))
        enroll_map, _, _ = make_trials(vector_set, 2, 1, 1, seed=3)
        assert enroll_map['spk00000'] == ('spk00000-0000', 'spk00000-0001')

    def test_too_many_targets(self):
        vector_set = generate(SynthSpec(2, 3, 2, seed=1))
        with pytest.raises(ValueError, match="target"):
            make_trials(vector_set, 1, 5, 1, seed=1)

    def test_class_too_small(self):
        vector_set = generate(SynthSpec(2, 1, 2, seed=1))
        with pytest.raises(ValueError, match="needs more than"):
            make_trials(vector_set, 1, 1, 1, seed=1)

    def test_deterministic(self):
        vector_set = generate(SynthSpec(5, 4, 2, seed=8))
        first = make_trials(vector_set, 1, 10, 10, seed=8)[1]
        second = make_trials(vector_set, 1, 10, 10, seed=8)[1]
        assert first.entries == second.entries
