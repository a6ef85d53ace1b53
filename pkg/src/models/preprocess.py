"""
Front-end processing applied before PLDA: centering, LDA, whitening and
length normalization. Pipeline order is center -> LDA -> whitening -> LN;
the PLDA projection follows in the scoring module.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import linalg

# Within-class ridge is RIDGE_SCALE * trace(S_w) / d
RIDGE_SCALE = 1e-6


class LnMode(str, Enum):
    NONE = 'none'
    FULL = 'full'
    PARTIAL = 'partial'


@dataclass(frozen=True, eq=False)
class LdaTransform:
    """
    Affine projection x -> projection @ (x - mean).

    Parameters:
    ----------
    projection : ndarray, shape (p, d)
        Rows are the retained discriminant directions
    mean : ndarray, shape (d,)
        Training global mean, removed before projecting
    """
    projection: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        projection = np.array(self.projection, dtype=np.float64, ndmin=2)
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        if projection.shape[0] < 1:
            raise ValueError("LDA output dimension must be at least 1")
        if projection.shape[1] != mean.shape[0]:
            raise ValueError(
                f"projection has {projection.shape[1]} columns but mean has {mean.shape[0]} entries")
        if not (np.all(np.isfinite(projection)) and np.all(np.isfinite(mean))):
            raise ValueError("LDA transform contains non-finite values")
        projection.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, 'projection', projection)
        object.__setattr__(self, 'mean', mean)

    @property
    def input_dim(self):
        return self.projection.shape[1]

    @property
    def output_dim(self):
        return self.projection.shape[0]

    @classmethod
    def centering(cls, mean):
        """Identity projection: only removes ``mean``"""
        mean = np.asarray(mean, dtype=np.float64).reshape(-1)
        return cls(np.eye(mean.shape[0]), mean)


def compute_mean(vector_set):
    '''
    Arithmetic mean over all records of a vector set.

    Returns:
    -----
        ndarray, shape (d,)
    '''
    if len(vector_set) == 0:
        raise ValueError("cannot compute the mean of an empty set")
    return vector_set.values.mean(axis=0)


def length_normalize(v):
    '''
    Rescale a vector to Euclidean norm sqrt(d).

    Parameters:
    ------
    v: array-like, shape (d,) or (N, d)
        One vector, or one vector per row

    Returns:
    -----
        ndarray of the same shape, each vector scaled to sqrt(d) * v / ||v||
    '''
    v = np.asarray(v, dtype=np.float64)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot length-normalize a zero vector")
    return np.sqrt(v.shape[-1]) * v / norms


def _class_scatters(values, labels, num_classes):
    """Within- and between-class scatter matrices, both divided by N"""
    n_samples, dim = values.shape
    counts = np.bincount(labels, minlength=num_classes).astype(np.float64)
    sums = np.zeros((num_classes, dim))
    np.add.at(sums, labels, values)
    class_means = sums / counts[:, None]
    global_mean = values.mean(axis=0)

    residuals = values - class_means[labels]
    within = residuals.T @ residuals / n_samples
    centered = class_means - global_mean
    between = (centered * counts[:, None]).T @ centered / n_samples
    return within, between


def fit_lda(vector_set, target_dim):
    '''
    Fit an LDA projection on a labeled vector set.

    Rows of the projection are the leading generalized eigenvectors of
    (between-class scatter, within-class scatter + ridge), sorted by
    descending eigenvalue.

    Parameters:
    ------
    vector_set: VectorSet
        Labeled training vectors with at least two classes
    target_dim: int
        Output dimension p, 1 <= p <= d

    Returns:
    -----
        LdaTransform
    '''
    if target_dim <= 0:
        raise ValueError(f"LDA dimension must be positive, got {target_dim}")
    if target_dim > vector_set.dim:
        raise ValueError(
            f"LDA dimension {target_dim} exceeds input dimension {vector_set.dim}")
    labels = vector_set.class_labels()
    if vector_set.num_classes < 2:
        raise ValueError("LDA needs at least two classes")

    values = vector_set.values
    within, between = _class_scatters(values, labels, vector_set.num_classes)
    ridge = RIDGE_SCALE * np.trace(within) / vector_set.dim
    if ridge <= 0:
        ridge = RIDGE_SCALE
    within = within + ridge * np.eye(vector_set.dim)

    eigvals, eigvecs = linalg.eigh(between, within)
    order = np.argsort(eigvals)[::-1][:target_dim]
    projection = eigvecs[:, order].T

    # sign convention: largest-magnitude entry of each row is positive
    pivots = np.argmax(np.abs(projection), axis=1)
    signs = np.sign(projection[np.arange(target_dim), pivots])
    signs[signs == 0] = 1.0
    projection = projection * signs[:, None]

    return LdaTransform(projection, compute_mean(vector_set))


def apply_lda(transform, vector_set):
    '''
    Map every record to projection @ (x - mean).

    Returns:
    -----
        VectorSet of dimension transform.output_dim with the same records
    '''
    if vector_set.dim != transform.input_dim:
        raise ValueError(
            f"vector dimension {vector_set.dim} does not match LDA input dimension {transform.input_dim}")
    return vector_set.with_values(transform_values(transform, vector_set.values))


def transform_values(transform, values):
    return (values - transform.mean) @ transform.projection.T


def apply_front_end(vector_set, front=None, normalize=False):
    '''
    Run the pre-PLDA pipeline: center/LDA through ``front`` (if any), then LN.

    Parameters:
    ------
    vector_set: VectorSet
        Raw vectors
    front: LdaTransform, optional
        Centering or LDA transform fitted on training data
    normalize: bool
        Apply length normalization after the front-end

    Returns:
    -----
        VectorSet in the space the global model was trained in
    '''
    processed = vector_set if front is None else apply_lda(front, vector_set)
    if normalize:
        processed = processed.with_values(length_normalize(processed.values))
    return processed


def fit_whitening(front, vector_set):
    '''
    Compose ``front`` with symmetric (ZCA) whitening of the total covariance
    of the projected training vectors.

    Parameters:
    ------
    front: LdaTransform
        Centering or LDA transform fitted on ``vector_set``
    vector_set: VectorSet
        Training vectors

    Returns:
    -----
        LdaTransform with the same mean and output dimension
    '''
    projected = transform_values(front, vector_set.values)
    if projected.shape[0] < 2:
        raise ValueError("whitening needs at least two vectors")
    covariance = np.cov(projected, rowvar=False, bias=True).reshape(front.output_dim, front.output_dim)
    eigvals, eigvecs = np.linalg.eigh(covariance)
    floor = RIDGE_SCALE * max(np.mean(eigvals), RIDGE_SCALE)
    eigvals = np.maximum(eigvals, 0.0) + floor
    whitening = eigvecs @ np.diag(1.0 / np.sqrt(eigvals)) @ eigvecs.T
    return LdaTransform(whitening @ front.projection, front.mean)


def fit_front_end(vector_set, target_dim=None, whiten=False):
    '''
    Fit the front-end: LDA to ``target_dim`` when given, otherwise centering
    on the training mean, optionally followed by total-covariance whitening.
    '''
    if target_dim is None:
        front = LdaTransform.centering(compute_mean(vector_set))
    else:
        front = fit_lda(vector_set, target_dim)
    if whiten:
        front = fit_whitening(front, vector_set)
    return front
