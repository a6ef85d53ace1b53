from dataclasses import dataclass

import numpy as np

from src.data.data_handling import EnrollMap, Trial, TrialLabel, TrialList, VectorSet

FAMILIES = ('gaussian', 'student_t')


@dataclass(frozen=True)
class SynthSpec:
    """
    Synthetic PLDA data specification.

    Parameters:
    ----------
    num_classes : int
        Number of classes K
    per_class : int
        Samples per class n
    dim : int
        Vector dimension d
    epsilon : float or sequence of float
        True between-class variances (a scalar applies to every dimension)
    family : str
        'gaussian' or 'student_t' within-class residuals
    nu : float
        Degrees of freedom for 'student_t' (must exceed 4)
    seed : int
        Random seed
    prefix : str
        Prefix of generated class and utterance ids
    """
    num_classes: int
    per_class: int
    dim: int
    epsilon: tuple = 1.0
    family: str = 'gaussian'
    nu: float = 5.0
    seed: int = 0
    prefix: str = 'spk'

    def __post_init__(self):
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be at least 1, got {self.num_classes}")
        if self.per_class < 1:
            raise ValueError(f"per_class must be at least 1, got {self.per_class}")
        if self.dim < 1:
            raise ValueError(f"dim must be at least 1, got {self.dim}")
        epsilon = np.broadcast_to(np.asarray(self.epsilon, dtype=np.float64), (self.dim,))
        if not np.all(np.isfinite(epsilon)) or np.any(epsilon < 0):
            raise ValueError("epsilon entries must be finite and non-negative")
        object.__setattr__(self, 'epsilon', tuple(float(e) for e in epsilon))
        if self.family not in FAMILIES:
            raise ValueError(f"Unknown family: {self.family}")
        if self.family == 'student_t' and not self.nu > 4:
            raise ValueError(f"student_t needs nu > 4, got {self.nu}")
        if not self.prefix or len(self.prefix.split()) != 1:
            raise ValueError(f"invalid id prefix {self.prefix!r}")


def generate(spec):
    '''
    Sample a labeled vector set from the PLDA generative process.

    Class means mu_k ~ N(0, diag(epsilon)); samples x = mu_k + z with
    z ~ N(0, I) (gaussian) or z = N(0, I) * sqrt((nu - 2) / g),
    g ~ chi-square(nu) per sample (student_t, unit covariance).

    Parameters:
    ------
    spec: SynthSpec

    Returns:
    -----
        VectorSet, deterministic given spec.seed
    '''
    rand_gen = np.random.RandomState(seed=spec.seed)
    K, n, d = spec.num_classes, spec.per_class, spec.dim

    means = rand_gen.standard_normal(size=(K, d)) * np.sqrt(np.array(spec.epsilon))
    residuals = rand_gen.standard_normal(size=(K * n, d))
    if spec.family == 'student_t':
        g = rand_gen.chisquare(spec.nu, size=(K * n, 1))
        residuals *= np.sqrt((spec.nu - 2.0) / g)

    values = np.repeat(means, n, axis=0) + residuals
    class_ids = [f"{spec.prefix}{k:05d}" for k in range(K) for _ in range(n)]
    ids = [f"{spec.prefix}{k:05d}-{i:04d}" for k in range(K) for i in range(n)]
    return VectorSet(ids, class_ids, values)


def make_trials(vector_set, enroll_per_class, targets, nontargets, seed=None):
    '''
    Split a labeled set into enrollment and test sides and sample trials.

    The first ``enroll_per_class`` records of each class (set order) enroll a
    model named after the class; the rest are test utterances. Target trials
    pair a model with its own class's test utterances, nontarget trials with
    other classes' utterances, sampled without replacement.

    Returns:
    -----
        (EnrollMap, TrialList, VectorSet of test utterances)
    '''
    if enroll_per_class < 1:
        raise ValueError(f"enroll_per_class must be at least 1, got {enroll_per_class}")
    if targets < 0 or nontargets < 0:
        raise ValueError("trial counts must be non-negative")
    vector_set.class_labels()
    if vector_set.num_classes < 2 and nontargets > 0:
        raise ValueError("nontarget trials need at least two classes")

    models = {}
    test_ids, test_class = [], []
    class_ids = vector_set.classes
    for k, (cid, positions) in enumerate(vector_set.class_index.items()):
        if len(positions) <= enroll_per_class:
            raise ValueError(
                f"class '{cid}' has {len(positions)} samples, needs more than {enroll_per_class}")
        models[cid] = [vector_set.ids[p] for p in positions[:enroll_per_class]]
        for p in positions[enroll_per_class:]:
            test_ids.append(vector_set.ids[p])
            test_class.append(k)

    num_test = len(test_ids)
    others = vector_set.num_classes - 1
    if targets > num_test:
        raise ValueError(f"requested {targets} target trials but only {num_test} are available")
    if nontargets > num_test * others:
        raise ValueError(
            f"requested {nontargets} nontarget trials but only {num_test * others} are available")

    rand_gen = np.random.RandomState(seed=seed)
    trials = []
    for u in rand_gen.choice(num_test, size=targets, replace=False):
        trials.append(Trial(class_ids[test_class[u]], test_ids[u], TrialLabel.TARGET))
    # flat index r -> (utterance r // others, r-th other class of that utterance)
    for r in rand_gen.choice(num_test * others, size=nontargets, replace=False):
        u, offset = divmod(int(r), others)
        model = offset if offset < test_class[u] else offset + 1
        trials.append(Trial(class_ids[model], test_ids[u], TrialLabel.NONTARGET))
    trials = [trials[i] for i in rand_gen.permutation(len(trials))]

    return EnrollMap(models), TrialList(trials), vector_set.subset(test_ids)
