"""
Local model of decoupled PLDA.

The prediction component is N(M x; mu, I) with M = diag(m_diag), integrated
against the global enrollment posterior. Training maximizes

    sum_k sum_i log N(M x_i^k; n_k eps / (n_k eps + 1) * xbar_k,
                              (1 + eps / (n_k eps + 1)) I)

with class means taken from the training set itself (single-set scheme),
using Adam and early stopping on a monitor trial list.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from numpy.random import RandomState

from src.models.base_model import ScorerConfig, Variant
from src.models.model_factory import create_scorer
from src.models.optimizer import Adam
from src.models.plda_model import LOG_2PI, log_gaussian
from src.models.preprocess import LnMode
from src.utils.evaluation import compute_eer
from src.utils.exceptions import NumericalError


@dataclass(frozen=True)
class LocalTrainConfig:
    """
    Local-model training settings.

    learning_rate 0 leaves M at the identity (useful as a vanilla baseline).
    batch_size counts classes per Adam step; None means full batch.
    """
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    max_epochs: int = 100
    patience: int = 5
    batch_size: int = None
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if self.patience < 1:
            raise ValueError(f"patience must be at least 1, got {self.patience}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be at least 1, got {self.max_epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")


@dataclass
class TrainHistory:
    """Per-epoch objective and monitor EER; epoch 0 is the identity transform"""
    baseline_objective: float
    baseline_eer: float
    objectives: list = field(default_factory=list)
    monitor_eers: list = field(default_factory=list)

    def __len__(self):
        return len(self.objectives)

    def append(self, objective, monitor_eer):
        self.objectives.append(objective)
        self.monitor_eers.append(monitor_eer)

    def best_epoch(self):
        """Epoch with the lowest monitor EER, earliest on ties (0 = identity)"""
        eers = [self.baseline_eer] + list(self.monitor_eers)
        return int(np.argmin(eers))

    def to_frame(self):
        return pd.DataFrame({
            'epoch': np.arange(0, len(self) + 1),
            'objective': [self.baseline_objective] + list(self.objectives),
            'monitor_eer': [self.baseline_eer] + list(self.monitor_eers),
        })

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)

    def print_summary(self):
        print("epoch  objective  monitor_eer(%)")
        for row in self.to_frame().itertuples(index=False):
            print(f"{row.epoch:5d}  {row.objective:.6f}  {100 * row.monitor_eer:.3f}")
        print(f"best epoch: {self.best_epoch()}")


@dataclass(frozen=True, eq=False)
class LocalModel:
    """
    Diagonal local transform M of decoupled PLDA.

    Parameters:
    ----------
    m_diag : ndarray, shape (d,)
        Diagonal of M
    best_epoch : int
        Training epoch the transform was taken from (0 = identity)
    monitor_eer_at_best : float, optional
        Monitor EER of the selected epoch
    history : TrainHistory, optional
    """
    m_diag: np.ndarray
    best_epoch: int = 0
    monitor_eer_at_best: float = None
    history: TrainHistory = None

    def __post_init__(self):
        m_diag = np.array(self.m_diag, dtype=np.float64).reshape(-1)
        if m_diag.shape[0] < 1:
            raise ValueError("local model dimension must be at least 1")
        if not np.all(np.isfinite(m_diag)):
            raise ValueError("m_diag contains non-finite values")
        if self.best_epoch < 0:
            raise ValueError(f"best_epoch must be non-negative, got {self.best_epoch}")
        m_diag.setflags(write=False)
        object.__setattr__(self, 'm_diag', m_diag)

    @property
    def dim(self):
        return self.m_diag.shape[0]

    @classmethod
    def identity(cls, dim):
        return cls(np.ones(dim))


@dataclass(frozen=True)
class MonitorTrials:
    """Trial list used for early stopping; ``vectors`` hold raw enrollment and test vectors"""
    trials: object
    vectors: object
    enroll_map: object


class _LocalStats:
    """
    Per-sample targets of the local objective, rows sorted by class index.

    ``vector_set`` gives the class posteriors; ``prediction_set`` (same
    records) gives the vectors multiplied by M.
    """

    def __init__(self, global_model, vector_set, prediction_set=None):
        labels = vector_set.class_labels()
        if vector_set.dim != global_model.dim:
            raise ValueError(
                f"vector dimension {vector_set.dim} does not match model dimension {global_model.dim}")
        if prediction_set is None:
            prediction_set = vector_set
        elif prediction_set.ids != vector_set.ids or prediction_set.dim != vector_set.dim:
            raise ValueError("prediction_set must hold the same records as vector_set")

        order = np.argsort(labels, kind='stable')
        labels = labels[order]
        num_classes = vector_set.num_classes
        counts = np.bincount(labels, minlength=num_classes)
        sums = np.zeros((num_classes, vector_set.dim))
        np.add.at(sums, labels, vector_set.values[order])
        xbar = sums / counts[:, None]

        eps = global_model.epsilon
        scaled = counts[:, None] * eps
        self.class_mean = scaled / (scaled + 1.0) * xbar
        self.class_var = eps / (scaled + 1.0)
        self.counts = counts
        self.labels = labels
        self.offsets = np.concatenate([[0], np.cumsum(counts)])

        self.x = prediction_set.values[order]
        self.pred_mean = self.class_mean[labels]
        self.pred_var = 1.0 + self.class_var[labels]

    @property
    def num_classes(self):
        return self.counts.shape[0]

    def rows_of(self, classes):
        return np.concatenate([np.arange(self.offsets[k], self.offsets[k + 1]) for k in classes])

    def _select(self, rows):
        if rows is None:
            return self.x, self.pred_mean, self.pred_var
        return self.x[rows], self.pred_mean[rows], self.pred_var[rows]

    def objective(self, m_diag, rows=None):
        x, mean, var = self._select(rows)
        return float(log_gaussian(m_diag * x, mean, var).sum())

    def gradient(self, m_diag, rows=None):
        x, mean, var = self._select(rows)
        return -((m_diag * x - mean) * x / var).sum(axis=0)

    def optimum(self):
        return (self.x * self.pred_mean / self.pred_var).sum(axis=0) / \
            (self.x * self.x / self.pred_var).sum(axis=0)

    def tied_objective(self, m_diag):
        y = m_diag * self.x
        y_sum = np.zeros_like(self.class_mean)
        y_sq = np.zeros_like(self.class_mean)
        np.add.at(y_sum, self.labels, y)
        np.add.at(y_sq, self.labels, y * y)
        n = self.counts[:, None].astype(np.float64)
        y_bar = y_sum / n
        spread = np.maximum(y_sq - n * y_bar * y_bar, 0.0)
        scaled = 1.0 + n * self.class_var
        diff = y_bar - self.class_mean
        per_class = -0.5 * (n * LOG_2PI + np.log(scaled) + spread + n * diff * diff / scaled)
        return float(per_class.sum())


def _check_m_diag(global_model, m_diag):
    m_diag = np.asarray(m_diag, dtype=np.float64).reshape(-1)
    if m_diag.shape[0] != global_model.dim:
        raise ValueError(f"m_diag has {m_diag.shape[0]} entries, expected {global_model.dim}")
    return m_diag


def local_log_likelihood(global_model, m_diag, vector_set, prediction_set=None):
    '''
    Local-model training objective (each sample integrated independently).

    Parameters:
    ------
    global_model: GlobalModel
    m_diag: array-like, shape (d,)
        Diagonal of M
    vector_set: VectorSet
        Labeled vectors projected into model space
    prediction_set: VectorSet, optional
        Vectors multiplied by M (same records); defaults to vector_set

    Returns:
    -----
        float
    '''
    m_diag = _check_m_diag(global_model, m_diag)
    return _LocalStats(global_model, vector_set, prediction_set).objective(m_diag)


def local_log_likelihood_tied(global_model, m_diag, vector_set, prediction_set=None):
    '''
    Alternative objective integrating the class mean once per class:
    sum_k log int prod_i N(M x_i^k; mu, I) p_g(mu | class k) dmu.
    Evaluation only.
    '''
    m_diag = _check_m_diag(global_model, m_diag)
    return _LocalStats(global_model, vector_set, prediction_set).tied_objective(m_diag)


def local_gradient(global_model, m_diag, vector_set, prediction_set=None):
    '''
    Gradient of local_log_likelihood() with respect to m_diag.

    Returns:
    -----
        ndarray, shape (d,)
    '''
    m_diag = _check_m_diag(global_model, m_diag)
    return _LocalStats(global_model, vector_set, prediction_set).gradient(m_diag)


def local_optimum(global_model, vector_set, prediction_set=None):
    '''
    Closed-form per-dimension maximizer of local_log_likelihood():
    sum(x m / s) / sum(x^2 / s).
    '''
    return _LocalStats(global_model, vector_set, prediction_set).optimum()


def prepare_training_set(global_model, vector_set, ln_mode=LnMode.NONE, front=None):
    '''
    Map raw labeled vectors into model space for train_local().

    Returns:
    -----
        (train_set, prediction_set); prediction_set is None unless
        ln_mode is partial, where it holds the non-normalized projection
    '''
    config = ScorerConfig(Variant.DEPLDA, ln_mode, global_model, LocalModel.identity(global_model.dim), front)
    prepared = create_scorer(config).prepare(vector_set)
    if config.ln_mode != LnMode.PARTIAL:
        return prepared.global_set, None
    return prepared.global_set, prepared.global_set.with_values(prepared.local_values)


def _batches(stats, batch_size, rand_gen):
    if batch_size is None:
        yield None
        return
    classes = rand_gen.permutation(stats.num_classes)
    for start in range(0, len(classes), batch_size):
        yield stats.rows_of(classes[start:start + batch_size])


def train_local(global_model, train_set, monitor, config=None, ln_mode=LnMode.NONE, front=None,
                prediction_set=None, verbose=False):
    '''
    Train the diagonal local transform with Adam and EER-based early stopping.

    M starts at the identity. Each epoch applies Adam updates from
    local_gradient(), then scores the monitor trials with decoupled PLDA.
    The transform with the lowest monitor EER is returned (earliest epoch on
    ties; epoch 0 is the identity).

    Parameters:
    ------
    global_model: GlobalModel
    train_set: VectorSet
        Labeled training vectors projected into model space (LN applied
        per ln_mode)
    monitor: MonitorTrials
        Labeled trials with raw vectors, scored through front -> LN -> W
    config: LocalTrainConfig, optional
    ln_mode: LnMode
        Length normalization used when scoring the monitor trials
    front: LdaTransform, optional
        Front-end used when scoring the monitor trials
    prediction_set: VectorSet, optional
        Projected vectors fed through M (partial LN: the non-normalized
        pipeline); defaults to train_set
    verbose: bool
        Print objective and monitor EER per epoch

    Returns:
    -----
        (LocalModel, TrainHistory)
    '''
    config = config or LocalTrainConfig()
    if len(monitor.trials) == 0:
        raise ValueError("monitor trial list is empty")
    if not monitor.trials.is_labeled:
        raise ValueError("monitor trials must all be labeled target or nontarget")

    stats = _LocalStats(global_model, train_set, prediction_set)
    dim = global_model.dim

    base_config = ScorerConfig(Variant.DEPLDA, ln_mode, global_model, LocalModel.identity(dim), front)
    # monitor vectors and posteriors do not depend on M
    base_scorer = create_scorer(base_config)
    prepared = base_scorer.prepare(monitor.vectors)
    needed = list(dict.fromkeys(t.enroll_id for t in monitor.trials))
    posteriors = base_scorer.enroll(monitor.enroll_map, prepared, needed)

    def monitor_eer(m_diag):
        scorer = create_scorer(replace(base_config, local_model=LocalModel(m_diag)))
        return compute_eer(scorer.score_trials(monitor.trials, posteriors, prepared)).eer

    rand_gen = RandomState(config.seed)
    optimizer = Adam(config.learning_rate, config.beta1, config.beta2, config.eps_hat)
    m_diag = np.ones(dim)

    history = TrainHistory(baseline_objective=stats.objective(m_diag), baseline_eer=monitor_eer(m_diag))
    best_epoch, best_m, best_eer = 0, m_diag.copy(), history.baseline_eer
    if verbose:
        print(f"Training local model: {len(train_set)} vectors, {stats.num_classes} classes, "
              f"{len(monitor.trials)} monitor trials")
        print(f"Epoch 0: objective = {history.baseline_objective:.6f}, "
              f"monitor EER = {100 * best_eer:.3f}%")

    epochs_without_improvement = 0
    for epoch in range(1, config.max_epochs + 1):
        for rows in _batches(stats, config.batch_size, rand_gen):
            m_diag = optimizer.step(m_diag, -stats.gradient(m_diag, rows))

        objective = stats.objective(m_diag)
        if not (math.isfinite(objective) and np.all(np.isfinite(m_diag))):
            raise NumericalError("non-finite local objective", epoch=epoch)
        eer = monitor_eer(m_diag)
        history.append(objective, eer)
        if verbose:
            print(f"Epoch {epoch}: objective = {objective:.6f}, monitor EER = {100 * eer:.3f}%")

        if eer < best_eer:
            best_epoch, best_m, best_eer = epoch, m_diag.copy(), eer
            epochs_without_improvement = 0
        else:
            epochs_without_improvement += 1
            if epochs_without_improvement >= config.patience:
                if verbose:
                    print(f"Epoch {epoch}: no improvement for {config.patience} epochs, stopping")
                break

    if verbose:
        print(f"Best epoch: {best_epoch}, monitor EER = {100 * best_eer:.3f}%")
    model = LocalModel(best_m, best_epoch=best_epoch, monitor_eer_at_best=best_eer, history=history)
    return model, history
