import numpy as np

from src.models.base_model import TrialScorer, normalized_likelihood
from src.models.plda_scorer import _check_dims
from src.utils.exceptions import ScorerConfigError


def score_nl_deplda(global_model, local_model, posterior, x_global, x_local):
    '''
    Decoupled PLDA log normalized likelihood.

    The numerator integrates the local model N(M x_local; mu, I) against the
    global enrollment posterior; the denominator is the global marginal of
    x_global.

    Parameters:
    ------
    global_model: GlobalModel
    local_model: LocalModel
    posterior: EnrollPosterior
    x_global: array-like, shape (d,)
        Projected test vector for the normalization component
    x_local: array-like, shape (d,)
        Projected test vector whose M-image feeds the prediction component

    Returns:
    -----
        float
    '''
    if local_model is None:
        raise ScorerConfigError("deplda scoring requires a local model")
    x_global = np.asarray(x_global, dtype=np.float64)
    x_local = np.asarray(x_local, dtype=np.float64)
    _check_dims(global_model, x_global, x_local, posterior.mean, local_model.m_diag)

    score = normalized_likelihood(
        global_model,
        posterior.mean[None, :],
        posterior.variance[None, :],
        local_model.m_diag * x_local[None, :],
        x_global[None, :])
    return float(score[0])


class DePldaScorer(TrialScorer):
    """Decoupled PLDA: global enrollment/normalization, local prediction through diag(M)"""

    def __init__(self, config):
        super().__init__(name='deplda', config=config)

    def score_batch(self, post_mean, post_var, x_global, x_local):
        m_diag = self.config.local_model.m_diag
        return normalized_likelihood(self.config.global_model, post_mean, post_var, m_diag * x_local, x_global)
