import numpy as np

from src.models.base_model import TrialScorer, normalized_likelihood
from src.models.plda_model import LOG_2PI


def _check_dims(global_model, *vectors):
    for v in vectors:
        if np.shape(v)[-1] != global_model.dim:
            raise ValueError(
                f"vector dimension {np.shape(v)[-1]} does not match model dimension {global_model.dim}")


def score_nl_plda(global_model, posterior, x):
    '''
    Vanilla PLDA log normalized likelihood of a projected test vector.

    Parameters:
    ------
    global_model: GlobalModel
    posterior: EnrollPosterior
        Enrollment posterior from the same model
    x: array-like, shape (d,)
        Projected test vector

    Returns:
    -----
        float
    '''
    x = np.asarray(x, dtype=np.float64)
    _check_dims(global_model, x, posterior.mean)
    score = normalized_likelihood(
        global_model, posterior.mean[None, :], posterior.variance[None, :], x[None, :], x[None, :])
    return float(score[0])


def _log_joint_marginal(vectors, epsilon):
    """
    Per-dimension log density of n vectors sharing one latent mean:
    N(0, I + eps * J) evaluated in closed form, summed over dimensions.
    """
    n = vectors.shape[0]
    mean = vectors.mean(axis=0)
    spread = ((vectors - mean) ** 2).sum(axis=0)
    scaled = 1.0 + n * epsilon
    per_dim = n * LOG_2PI + np.log(scaled) + spread + n * mean * mean / scaled
    return -0.5 * per_dim.sum()


def score_lr_plda(global_model, enroll_vectors, x):
    '''
    Vanilla PLDA log likelihood ratio from exact joint marginals:
    log p(x, x_1..x_n) - log p(x) - log p(x_1..x_n).

    Parameters:
    ------
    enroll_vectors: array-like, shape (n, d)
        Projected enrollment vectors, n >= 1
    x: array-like, shape (d,)
        Projected test vector

    Returns:
    -----
        float
    '''
    enroll_vectors = np.atleast_2d(np.asarray(enroll_vectors, dtype=np.float64))
    if enroll_vectors.size == 0:
        raise ValueError("LR scoring needs at least one enrollment vector")
    x = np.asarray(x, dtype=np.float64)
    _check_dims(global_model, x, enroll_vectors)

    epsilon = global_model.epsilon
    joint = _log_joint_marginal(np.vstack([x[None, :], enroll_vectors]), epsilon)
    test = _log_joint_marginal(x[None, :], epsilon)
    enroll = _log_joint_marginal(enroll_vectors, epsilon)
    return float(joint - test - enroll)


class PldaScorer(TrialScorer):
    """Vanilla PLDA: enrollment, prediction and normalization from one global model"""

    def __init__(self, config):
        super().__init__(name='plda', config=config)

    def score_batch(self, post_mean, post_var, x_global, x_local):
        return normalized_likelihood(self.config.global_model, post_mean, post_var, x_global, x_global)
