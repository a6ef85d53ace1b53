"""
Global linear-Gaussian (two-covariance) PLDA model.

After simultaneous diagonalization by W, the model reads

    p(mu)    = N(mu; 0, diag(epsilon))
    p(x|mu)  = N(x; mu, I)

with x = W (v - mean). Estimation is EM on the full two-covariance model
followed by one diagonalization.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.models.preprocess import RIDGE_SCALE
from src.utils.exceptions import NumericalError

EPSILON_FLOOR = 1e-8
VARIANCE_FLOOR = 1e-12
SYMMETRY_TOLERANCE = 1e-8
DEFAULT_EM_ITERATIONS = 10

LOG_2PI = math.log(2.0 * math.pi)


def log_gaussian(x, mean, var):
    """Elementwise log N(x; mean, var) with the variance floored at VARIANCE_FLOOR"""
    var = np.maximum(var, VARIANCE_FLOOR)
    diff = x - mean
    return -0.5 * (LOG_2PI + np.log(var) + diff * diff / var)


@dataclass(frozen=True, eq=False)
class GlobalModel:
    """
    Diagonalized global PLDA model.

    Parameters:
    ----------
    mean : ndarray, shape (d,)
        Training global mean in the input space
    transform : ndarray, shape (d, d)
        W, mapping centered inputs to the space where the within-class
        covariance is I and the between-class covariance is diag(epsilon)
    epsilon : ndarray, shape (d,)
        Between-class variances, each >= EPSILON_FLOOR
    """
    mean: np.ndarray
    transform: np.ndarray
    epsilon: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        transform = np.array(self.transform, dtype=np.float64, ndmin=2)
        epsilon = np.array(self.epsilon, dtype=np.float64).reshape(-1)
        dim = mean.shape[0]
        if dim < 1:
            raise ValueError("model dimension must be at least 1")
        if transform.shape != (dim, dim):
            raise ValueError(f"W has shape {transform.shape}, expected ({dim}, {dim})")
        if epsilon.shape != (dim,):
            raise ValueError(f"epsilon has {epsilon.shape[0]} entries, expected {dim}")
        for name, array in (('mean', mean), ('W', transform), ('epsilon', epsilon)):
            if not np.all(np.isfinite(array)):
                raise ValueError(f"{name} contains non-finite values")
        if np.any(epsilon < EPSILON_FLOOR):
            raise ValueError(f"epsilon entries must be >= {EPSILON_FLOOR}")
        for array in (mean, transform, epsilon):
            array.setflags(write=False)
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'transform', transform)
        object.__setattr__(self, 'epsilon', epsilon)

    @property
    def dim(self):
        return self.mean.shape[0]


@dataclass(frozen=True)
class EnrollPosterior:
    """Posterior N(mean, diag(variance)) of the class mean given ``count`` enrollment vectors"""
    mean: np.ndarray
    variance: np.ndarray
    count: int


@dataclass
class EmTrace:
    """Training log-likelihood after each EM iteration"""
    log_likelihoods: list = field(default_factory=list)

    def __len__(self):
        return len(self.log_likelihoods)

    def is_non_decreasing(self, rel_slack=1e-9):
        values = self.log_likelihoods
        return all(b >= a - rel_slack * abs(a) for a, b in zip(values, values[1:]))

    def to_frame(self):
        return pd.DataFrame({
            'iteration': np.arange(1, len(self.log_likelihoods) + 1),
            'log_likelihood': self.log_likelihoods,
        })

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def _check_symmetric(matrix, name):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {matrix.shape}")
    asymmetry = np.max(np.abs(matrix - matrix.T))
    if asymmetry > SYMMETRY_TOLERANCE:
        raise ValueError(f"{name} is not symmetric (max asymmetry {asymmetry:.3g})")
    return 0.5 * (matrix + matrix.T)


def simultaneous_diagonalize(sigma_w, sigma_b):
    '''
    Find W with W sigma_w W^T = I and W sigma_b W^T = diag(epsilon).

    sigma_w is whitened through its eigendecomposition, then the whitened
    sigma_b is eigendecomposed. No ridge is applied here.

    Parameters:
    ------
    sigma_w: array-like, shape (d, d)
        Symmetric positive definite within-class covariance
    sigma_b: array-like, shape (d, d)
        Symmetric positive semi-definite between-class covariance

    Returns:
    -----
        (W, epsilon) with epsilon sorted in descending order
    '''
    sigma_w = _check_symmetric(sigma_w, 'sigma_w')
    sigma_b = _check_symmetric(sigma_b, 'sigma_b')
    if sigma_w.shape != sigma_b.shape:
        raise ValueError(
            f"sigma_w has shape {sigma_w.shape} but sigma_b has shape {sigma_b.shape}")

    w_vals, w_vecs = np.linalg.eigh(sigma_w)
    tolerance = np.finfo(np.float64).eps * sigma_w.shape[0] * max(np.max(np.abs(w_vals)), 1.0)
    if w_vals[0] <= tolerance:
        raise NumericalError(
            f"sigma_w is not positive definite (smallest eigenvalue {w_vals[0]:.3g})")

    whitener = (w_vecs / np.sqrt(w_vals)).T
    whitened_b = whitener @ sigma_b @ whitener.T
    whitened_b = 0.5 * (whitened_b + whitened_b.T)
    b_vals, b_vecs = np.linalg.eigh(whitened_b)
    order = np.argsort(b_vals, kind='stable')[::-1]
    transform = b_vecs[:, order].T @ whitener
    return transform, b_vals[order]


def _inv_sym(matrix):
    inverse = np.linalg.inv(matrix)
    return 0.5 * (inverse + inverse.T)


class _ClassStats:
    """Sufficient statistics of a centered labeled training set"""

    def __init__(self, values, labels, num_classes):
        self.n_samples, self.dim = values.shape
        self.counts = np.bincount(labels, minlength=num_classes)
        if np.any(self.counts == 0):
            raise ValueError("every class needs at least one sample")
        self.sums = np.zeros((num_classes, self.dim))
        np.add.at(self.sums, labels, values)
        self.second_moment = values.T @ values
        class_means = self.sums / self.counts[:, None]
        residuals = values - class_means[labels]
        self.within_scatter = residuals.T @ residuals
        self.class_means = class_means
        self.unique_counts = np.unique(self.counts)


def _initial_covariances(stats):
    """Moment estimates: pooled within-class covariance and covariance of class means"""
    within = stats.within_scatter / stats.n_samples
    between = stats.class_means.T @ stats.class_means / stats.class_means.shape[0]
    ridge = RIDGE_SCALE * max(np.trace(within), np.trace(between), 1.0) / stats.dim
    eye = np.eye(stats.dim)
    return within + ridge * eye, between + ridge * eye


def _em_step(stats, sigma_w, sigma_b):
    """One EM iteration of the zero-mean two-covariance model"""
    w_inv = _inv_sym(sigma_w)
    b_inv = _inv_sym(sigma_b)
    num_classes = stats.sums.shape[0]

    post_means = np.zeros_like(stats.sums)
    post_cov_sum = np.zeros((stats.dim, stats.dim))
    weighted_cov_sum = np.zeros((stats.dim, stats.dim))
    for n in stats.unique_counts:
        members = stats.counts == n
        post_cov = _inv_sym(b_inv + n * w_inv)
        post_means[members] = stats.sums[members] @ w_inv @ post_cov
        post_cov_sum += members.sum() * post_cov
        weighted_cov_sum += members.sum() * n * post_cov

    new_b = (post_cov_sum + post_means.T @ post_means) / num_classes
    cross = stats.sums.T @ post_means
    new_w = (stats.second_moment - cross - cross.T
             + (post_means * stats.counts[:, None]).T @ post_means
             + weighted_cov_sum) / stats.n_samples
    return 0.5 * (new_w + new_w.T), 0.5 * (new_b + new_b.T)


def _log_likelihood(stats, sigma_w, sigma_b):
    """Sum over classes of ln p(x_1^k, ..., x_{n_k}^k) under (sigma_w, sigma_b)"""
    w_inv = _inv_sym(sigma_w)
    _, logdet_w = np.linalg.slogdet(sigma_w)
    total = -0.5 * np.sum(w_inv * stats.within_scatter)
    for n in stats.unique_counts:
        members = stats.counts == n
        num = members.sum()
        cov_n = sigma_w + n * sigma_b
        _, logdet_n = np.linalg.slogdet(cov_n)
        means = stats.class_means[members]
        quad = np.sum((means @ _inv_sym(cov_n)) * means)
        total -= 0.5 * (num * (n * stats.dim * LOG_2PI + (n - 1) * logdet_w + logdet_n) + n * quad)
    return float(total)


def fit_global(vector_set, iterations=DEFAULT_EM_ITERATIONS, verbose=False):
    '''
    Estimate the global PLDA model by maximum likelihood.

    EM runs on the two-covariance model (full between- and within-class
    covariances) initialized from moment scatters; the result is then
    simultaneously diagonalized.

    Parameters:
    ------
    vector_set: VectorSet
        Labeled training vectors (at least two classes)
    iterations: int
        Number of EM iterations
    verbose: bool
        Print the log-likelihood after each iteration

    Returns:
    -----
        (GlobalModel, EmTrace)
    '''
    if iterations < 0:
        raise ValueError(f"iterations must be non-negative, got {iterations}")
    labels = vector_set.class_labels()
    if vector_set.num_classes < 2:
        raise ValueError("global model training needs at least two classes")

    mean = vector_set.values.mean(axis=0)
    stats = _ClassStats(vector_set.values - mean, labels, vector_set.num_classes)
    sigma_w, sigma_b = _initial_covariances(stats)

    if verbose:
        print(f"Training global PLDA on {stats.n_samples} vectors, "
              f"{vector_set.num_classes} classes, dimension {stats.dim}")

    trace = EmTrace()
    for iteration in range(1, iterations + 1):
        sigma_w, sigma_b = _em_step(stats, sigma_w, sigma_b)
        log_likelihood = _log_likelihood(stats, sigma_w, sigma_b)
        if not math.isfinite(log_likelihood):
            raise NumericalError(f"non-finite log-likelihood at EM iteration {iteration}")
        trace.log_likelihoods.append(log_likelihood)
        if verbose:
            print(f"Iteration {iteration}: log-likelihood = {log_likelihood:.6f}")

    ridge = RIDGE_SCALE * np.trace(sigma_w) / stats.dim
    transform, epsilon = simultaneous_diagonalize(sigma_w + ridge * np.eye(stats.dim), sigma_b)
    epsilon = np.maximum(epsilon, EPSILON_FLOOR)
    return GlobalModel(mean, transform, epsilon), trace


def _check_dim(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.dim:
        raise ValueError(f"vector dimension {x.shape[-1]} does not match model dimension {model.dim}")
    return x


def project(model, v):
    '''
    Map input vectors into model space: W (v - mean).

    Parameters:
    ------
    v: array-like, shape (d,) or (N, d)

    Returns:
    -----
        ndarray of the same shape
    '''
    v = _check_dim(model, v)
    return (v - model.mean) @ model.transform.T


def project_set(model, vector_set):
    return vector_set.with_values(project(model, vector_set.values))


def enroll_posterior(model, enroll_vectors):
    '''
    Posterior of the class mean given projected enrollment vectors.

    Per dimension j: mean_j = n eps_j / (n eps_j + 1) * xbar_j and
    variance_j = eps_j / (n eps_j + 1).

    Parameters:
    ------
    model: GlobalModel
    enroll_vectors: array-like, shape (n, d)
        Enrollment vectors already projected into model space

    Returns:
    -----
        EnrollPosterior
    '''
    vectors = np.atleast_2d(np.asarray(enroll_vectors, dtype=np.float64))
    count = 0 if vectors.size == 0 else vectors.shape[0]
    if count == 0:
        raise ValueError("enrollment needs at least one vector")
    vectors = _check_dim(model, vectors)
    # exactly rounded sums: the posterior does not depend on vector order
    xbar = np.array([math.fsum(column) for column in vectors.T]) / count
    scaled = count * model.epsilon
    return EnrollPosterior(
        mean=scaled / (scaled + 1.0) * xbar,
        variance=model.epsilon / (scaled + 1.0),
        count=count)


def log_marginal(model, x):
    '''
    Log marginal density of projected vectors: sum_j log N(x_j; 0, eps_j + 1).

    Returns:
    -----
        float for one vector, ndarray for a matrix of row vectors
    '''
    x = _check_dim(model, x)
    return log_gaussian(x, 0.0, model.epsilon + 1.0).sum(axis=-1)
