"""
Synthetic PLDA vs decoupled PLDA comparison.

Trains both back-ends on a synthetic training set, early-stops the local
model on trials drawn from the training set itself and evaluates on an
independently generated set of unseen classes.
"""
from dataclasses import dataclass, replace

import numpy as np

from src.data.synthetic import SynthSpec, generate, make_trials
from src.models.base_model import ScorerConfig, Variant
from src.models.deplda_model import LocalTrainConfig, MonitorTrials, prepare_training_set, train_local
from src.models.plda_model import DEFAULT_EM_ITERATIONS, fit_global
from src.models.preprocess import LnMode, apply_front_end, fit_front_end
from src.models.scoring import score_trialset
from src.utils.evaluation import compute_eer


@dataclass(frozen=True)
class ProtocolSettings:
    """Sizes of the synthetic protocol; defaults give 2000/2000 evaluation trials"""
    train_classes: int = 300
    train_per_class: int = 10
    eval_classes: int = 100
    eval_per_class: int = 25
    dim: int = 8
    epsilon_range: tuple = (0.5, 8.0)
    nu: float = 5.0
    enroll_per_class: int = 3
    targets: int = 2000
    nontargets: int = 2000
    em_iterations: int = DEFAULT_EM_ITERATIONS
    whiten: bool = True
    # 10 Adam steps per epoch over 300 classes
    train_config: LocalTrainConfig = LocalTrainConfig(learning_rate=1e-3, batch_size=30, patience=5)

    @property
    def epsilon(self):
        low, high = self.epsilon_range
        return tuple(np.logspace(np.log10(low), np.log10(high), self.dim))


@dataclass(frozen=True)
class ProtocolResult:
    family: str
    seed: int
    plda_eer: float
    deplda_eer: float
    plda_ln_eer: float
    best_epoch: int
    m_diag: np.ndarray
    history: object


def _eer(config, enroll_map, eval_set, test_side, trials):
    scored = score_trialset(config, enroll_map, eval_set, test_side, trials)
    return compute_eer(scored).eer


def run_protocol(family, seed, settings=None, train_config=None, verbose=False):
    '''
    Run one seed of the synthetic comparison.

    Parameters:
    ------
    family: str
        'gaussian' or 'student_t'
    seed: int
        Seeds data generation, trial sampling and mini-batch shuffling
    settings: ProtocolSettings, optional
    train_config: LocalTrainConfig, optional
        Local-model training settings, default settings.train_config
        (seed is replaced by ``seed``)
    verbose: bool

    Returns:
    -----
        ProtocolResult with EERs as fractions
    '''
    settings = settings or ProtocolSettings()
    train_config = replace(train_config or settings.train_config, seed=seed)

    train_set = generate(SynthSpec(
        settings.train_classes, settings.train_per_class, settings.dim, settings.epsilon,
        family=family, nu=settings.nu, seed=seed, prefix='trn'))
    eval_set = generate(SynthSpec(
        settings.eval_classes, settings.eval_per_class, settings.dim, settings.epsilon,
        family=family, nu=settings.nu, seed=seed + 1000, prefix='evl'))

    monitor_map, monitor_trials, _ = make_trials(
        train_set, settings.enroll_per_class, settings.targets, settings.nontargets, seed=seed)
    enroll_map, trials, test_side = make_trials(
        eval_set, settings.enroll_per_class, settings.targets, settings.nontargets, seed=seed + 1)

    front = fit_front_end(train_set, whiten=settings.whiten)
    global_model, _ = fit_global(apply_front_end(train_set, front), settings.em_iterations)
    ln_model, _ = fit_global(apply_front_end(train_set, front, normalize=True), settings.em_iterations)

    train_view, _ = prepare_training_set(global_model, train_set, LnMode.NONE, front)
    local_model, history = train_local(
        global_model, train_view, MonitorTrials(monitor_trials, train_set, monitor_map),
        config=train_config, front=front, verbose=verbose)

    plda = ScorerConfig(Variant.PLDA, LnMode.NONE, global_model, front=front)
    deplda = ScorerConfig(Variant.DEPLDA, LnMode.NONE, global_model, local_model, front=front)
    plda_ln = ScorerConfig(Variant.PLDA, LnMode.FULL, ln_model, front=front)
    result = ProtocolResult(
        family=family,
        seed=seed,
        plda_eer=_eer(plda, enroll_map, eval_set, test_side, trials),
        deplda_eer=_eer(deplda, enroll_map, eval_set, test_side, trials),
        plda_ln_eer=_eer(plda_ln, enroll_map, eval_set, test_side, trials),
        best_epoch=local_model.best_epoch,
        m_diag=local_model.m_diag,
        history=history)

    if verbose:
        print(f"[{family}, seed {seed}] PLDA EER = {100 * result.plda_eer:.3f}%, "
              f"dePLDA EER = {100 * result.deplda_eer:.3f}%, "
              f"PLDA+LN EER = {100 * result.plda_ln_eer:.3f}%, best epoch = {result.best_epoch}")
    return result
