import numpy as np
import pytest

from src.models.deplda_model import LocalTrainConfig
from src.utils.benchmark import ProtocolSettings, run_protocol

TINY = ProtocolSettings(train_classes=30, train_per_class=4, eval_classes=10, eval_per_class=5, dim=3,
                        enroll_per_class=2, targets=20, nontargets=20, em_iterations=3)


class TestProtocolSettings:

    def test_epsilon_log_spaced(self):
        epsilon = ProtocolSettings(dim=3, epsilon_range=(1.0, 100.0)).epsilon
        assert epsilon == pytest.approx((1.0, 10.0, 100.0))

    def test_default_local_training_is_mini_batched(self):
        config = ProtocolSettings().train_config
        assert config.batch_size is not None
        assert ProtocolSettings().train_classes // config.batch_size > 1

    def test_default_trial_counts_are_satisfiable(self):
        settings = ProtocolSettings()
        test_per_class = settings.eval_per_class - settings.enroll_per_class
        assert settings.eval_classes * test_per_class >= settings.targets


class TestRunProtocol:

    def test_small_run(self, capsys):
        result = run_protocol('student_t', 3, TINY, LocalTrainConfig(max_epochs=3), verbose=True)
        for eer in (result.plda_eer, result.deplda_eer, result.plda_ln_eer):
            assert 0.0 <= eer <= 1.0
        assert 0 <= result.best_epoch <= 3
        assert result.m_diag.shape == (3,)
        assert len(result.history) <= 3
        assert "[student_t, seed 3] PLDA EER" in capsys.readouterr().out

    def test_deterministic(self):
        first = run_protocol('gaussian', 1, TINY, LocalTrainConfig(max_epochs=2))
        second = run_protocol('gaussian', 1, TINY, LocalTrainConfig(max_epochs=2))
        assert first.plda_eer == second.plda_eer
        assert first.deplda_eer == second.deplda_eer
        assert np.array_equal(first.m_diag, second.m_diag)
